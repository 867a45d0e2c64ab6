#include "betamix/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "betamix/bbeta.hpp"

namespace betamix {

namespace {

constexpr double kArmijo = 1e-4;
constexpr double kMinStep = 1e-12;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

using Mat4 = std::array<Vec4, 4>;

Mat4 identity() {
  Mat4 m{};
  for (int i = 0; i < 4; ++i) m[i][i] = 1.0;
  return m;
}

double dot(const Vec4& a, const Vec4& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3];
}

double inf_norm(const Vec4& a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::fabs(v));
  return m;
}

Vec4 mul(const Mat4& m, const Vec4& v) {
  Vec4 r{};
  for (int i = 0; i < 4; ++i) r[i] = dot(m[i], v);
  return r;
}

double safe(double v) { return std::isfinite(v) ? v : kNegInf; }

// Inverse-Hessian BFGS update for the minimization of -f, with s the step and
// y = g_old - g_new (gradients of f).
void bfgs_update(Mat4& h, const Vec4& s, const Vec4& y) {
  const double sy = dot(s, y);
  const Vec4 hy = mul(h, y);
  const double yhy = dot(y, hy);
  const double rho = 1.0 / sy;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      h[i][j] += rho * ((1.0 + rho * yhy) * s[i] * s[j] - hy[i] * s[j] - s[i] * hy[j]);
    }
  }
}

}  // namespace

Bounds4 Bounds4::alpha_defaults() {
  return {{kAlphaMin, kAlphaMin, kAlphaMin, kAlphaMin},
          {kAlphaMax, kAlphaMax, kAlphaMax, kAlphaMax}};
}

void Bounds4::validate() const {
  for (int j = 0; j < 4; ++j) {
    if (!(lower[j] < upper[j])) {
      throw std::invalid_argument("Bounds4: lower must be below upper in every coordinate");
    }
  }
}

bool Bounds4::contains(const Vec4& v) const {
  for (int j = 0; j < 4; ++j) {
    if (!(v[j] >= lower[j] && v[j] <= upper[j])) return false;
  }
  return true;
}

Vec4 Bounds4::project(const Vec4& v) const {
  Vec4 r{};
  for (int j = 0; j < 4; ++j) r[j] = std::clamp(v[j], lower[j], upper[j]);
  return r;
}

Vec4 finite_difference_gradient(const Objective4& objective, const Vec4& x, double fx,
                                const Bounds4& bounds) {
  Vec4 g{};
  for (int j = 0; j < 4; ++j) {
    const double h = std::max(1e-6, 1e-6 * std::fabs(x[j]));
    Vec4 xp = x;
    Vec4 xm = x;
    xp[j] = std::min(x[j] + h, bounds.upper[j]);
    xm[j] = std::max(x[j] - h, bounds.lower[j]);
    const double fp = safe(objective(xp));
    const double fm = safe(objective(xm));
    const bool ok_p = std::isfinite(fp) && xp[j] > x[j];
    const bool ok_m = std::isfinite(fm) && xm[j] < x[j];
    if (ok_p && ok_m) {
      g[j] = (fp - fm) / (xp[j] - xm[j]);
    } else if (ok_p) {
      g[j] = (fp - fx) / (xp[j] - x[j]);
    } else if (ok_m) {
      g[j] = (fx - fm) / (x[j] - xm[j]);
    } else {
      g[j] = 0.0;
    }
  }
  return g;
}

OptimReport maximize(const Objective4& objective, const Vec4& start, const Bounds4& bounds,
                     const OptimOptions& options) {
  bounds.validate();
  int evaluations = 0;
  auto eval = [&](const Vec4& v) {
    ++evaluations;
    return safe(objective(v));
  };

  Vec4 x = bounds.project(start);
  double fx = eval(x);
  if (!std::isfinite(fx)) {
    throw std::invalid_argument("maximize: objective is not finite at the start point");
  }
  auto gradient = [&](const Vec4& at, double f_at) {
    evaluations += 8;
    return finite_difference_gradient(objective, at, f_at, bounds);
  };
  Vec4 g = gradient(x, fx);
  Mat4 h = identity();
  bool fresh = true;  // h is the (unscaled) identity

  OptimReport report{x, fx, 0, 0, false};
  for (int it = 0; it < options.max_iters; ++it) {
    report.iterations = it + 1;

    Vec4 pg{};
    for (int j = 0; j < 4; ++j) {
      pg[j] = std::clamp(x[j] + g[j], bounds.lower[j], bounds.upper[j]) - x[j];
    }
    if (inf_norm(pg) < options.tol) {
      report.converged = true;
      break;
    }

    // Coordinates pinned at a bound with the gradient pushing outward stay put.
    std::array<bool, 4> active{};
    for (int j = 0; j < 4; ++j) {
      active[j] = (x[j] <= bounds.lower[j] && g[j] < 0.0) ||
                  (x[j] >= bounds.upper[j] && g[j] > 0.0);
    }
    auto direction = [&]() {
      Vec4 d = mul(h, g);
      for (int j = 0; j < 4; ++j) {
        if (active[j]) d[j] = 0.0;
      }
      return d;
    };
    Vec4 d = direction();
    if (!(dot(g, d) > 0.0)) {
      h = identity();
      fresh = true;
      d = direction();
    }
    double t = 1.0;
    if (fresh) {
      const double n = inf_norm(d);
      if (n > 1.0) t = 1.0 / n;
    }

    bool accepted = false;
    bool stalled = false;
    Vec4 xn{};
    double fn = kNegInf;
    for (;;) {
      Vec4 trial{};
      for (int j = 0; j < 4; ++j) trial[j] = x[j] + t * d[j];
      xn = bounds.project(trial);
      Vec4 step{};
      for (int j = 0; j < 4; ++j) step[j] = xn[j] - x[j];
      if (inf_norm(step) < kMinStep) {
        stalled = true;
        break;
      }
      fn = eval(xn);
      if (fn >= fx + kArmijo * dot(g, step) && fn >= fx) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      if (!fresh) {
        // Retry from steepest ascent before giving up.
        h = identity();
        fresh = true;
        continue;
      }
      report.converged = stalled;
      break;
    }

    const Vec4 gn = gradient(xn, fn);
    Vec4 s{};
    Vec4 y{};
    for (int j = 0; j < 4; ++j) {
      s[j] = xn[j] - x[j];
      y[j] = g[j] - gn[j];
    }
    const double sy = dot(s, y);
    if (sy > 1e-12 * std::sqrt(dot(s, s) * dot(y, y))) {
      if (fresh) {
        const double scale = sy / dot(y, y);
        h = identity();
        for (int i = 0; i < 4; ++i) h[i][i] = scale;
      }
      bfgs_update(h, s, y);
      fresh = false;
    }

    const double gain = fn - fx;
    x = xn;
    fx = fn;
    g = gn;
    if (gain <= options.ftol * std::max({1.0, std::fabs(fx)})) {
      report.converged = true;
      break;
    }
  }
  report.argmax = x;
  report.value = fx;
  report.evaluations = evaluations;
  return report;
}

}  // namespace betamix
