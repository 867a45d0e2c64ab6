#include "betamix/bbeta.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>
#include <sstream>
#include <string>

namespace betamix {

namespace {

constexpr int kMaxLevels = 16;
constexpr int kCachedLevels = 8;
// Largest |t| of the tanh-sinh grid. At t = 12 the node sits about
// exp(-2.5e5) from the endpoint, far past what any shape >= kAlphaMin needs.
constexpr double kMaxAbscissa = 12.0;
// Outward walks stop once terms fall this far (in log) below the running max.
constexpr double kTruncation = 34.5;
constexpr double kLineOffset = 1e-12;

double softplus(double z) {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

double log_add(double a, double b) {
  const double hi = std::max(a, b);
  const double lo = std::min(a, b);
  return hi + std::log1p(std::exp(lo - hi));
}

// Nodes with t >= 0 of one refinement level. Level 0 holds t = 0, 1, 2, ...;
// level l > 0 holds the odd multiples of 2^-l. Negative abscissae reuse the
// same rows with log_a and log_b exchanged.
struct LevelTable {
  double log_step = 0.0;
  std::vector<double> log_pi_cosh;  // log(pi cosh t)
  std::vector<double> log_a;        // log((1 + tanh(pi/2 sinh t)) / 2)
  std::vector<double> log_b;        // log((1 - tanh(pi/2 sinh t)) / 2)
};

LevelTable build_level(int level) {
  LevelTable tab;
  const double step = std::ldexp(1.0, -level);
  tab.log_step = std::log(step);
  for (std::size_t k = 0;; ++k) {
    const double t = level == 0 ? static_cast<double>(k)
                                : (2.0 * static_cast<double>(k) + 1.0) * step;
    if (t > kMaxAbscissa) break;
    const double s = 0.5 * std::numbers::pi * std::sinh(t);
    // log cosh t, stable for large t
    const double log_cosh = t + std::log1p(std::exp(-2.0 * t)) - std::numbers::ln2;
    tab.log_pi_cosh.push_back(std::log(std::numbers::pi) + log_cosh);
    tab.log_a.push_back(-softplus(-2.0 * s));
    tab.log_b.push_back(-softplus(2.0 * s));
  }
  return tab;
}

const LevelTable& level_table(int level) {
  static std::array<std::once_flag, kMaxLevels> once;
  static std::array<LevelTable, kMaxLevels> tables;
  std::call_once(once[level], [level] { tables[level] = build_level(level); });
  return tables[level];
}

// Integration range of one point, with the four integrand factors written as
// offset + distance-from-endpoint so that vanishing factors keep full
// relative precision near their endpoint.
//   f1 = u         = lo       + dl
//   f2 = x - u     = (x - hi) + dh
//   f3 = y - u     = (y - hi) + dh
//   f4 = 1 - x - y + u = (lo - (x + y - 1)) + dl
struct Geometry {
  double log_width = 0.0;
  std::array<double, 4> offset{};
  std::array<double, 4> log_offset{};
};

Geometry make_geometry(double x, double y) {
  // On x == y or x + y == 1 two factors vanish at the same endpoint and the
  // integral can diverge; step off the line.
  for (int attempt = 0; attempt < 4; ++attempt) {
    if (x == y || x + y - 1.0 == 0.0) {
      y -= kLineOffset;
    } else {
      break;
    }
  }
  const double s1 = x + y - 1.0;
  const double lo = std::max(0.0, s1);
  const double hi = std::min(x, y);
  Geometry g;
  g.log_width = std::log(hi - lo);
  g.offset = {lo, x - hi, y - hi, lo - s1};
  for (int j = 0; j < 4; ++j) {
    g.log_offset[j] = g.offset[j] > 0.0 ? std::log(g.offset[j])
                                        : -std::numeric_limits<double>::infinity();
  }
  return g;
}

struct NodeFactors {
  double base;                 // log weight minus the sum of factor logs
  std::array<double, 4> logs;  // log f1 .. log f4
};

NodeFactors node_factors(const Geometry& g, const LevelTable& tab, std::size_t k,
                         int side) {
  const double la = side > 0 ? tab.log_a[k] : tab.log_b[k];
  const double lb = side > 0 ? tab.log_b[k] : tab.log_a[k];
  const double log_dl = g.log_width + la;
  const double log_dh = g.log_width + lb;
  auto factor = [&](int j, double log_dist) {
    return g.offset[j] > 0.0 ? log_add(g.log_offset[j], log_dist) : log_dist;
  };
  NodeFactors f;
  f.logs = {factor(0, log_dl), factor(1, log_dh), factor(2, log_dh),
            factor(3, log_dl)};
  f.base = g.log_width + tab.log_pi_cosh[k] + la + lb -
           (f.logs[0] + f.logs[1] + f.logs[2] + f.logs[3]);
  return f;
}

double node_term(const std::array<double, 4>& a, const NodeFactors& f) {
  return f.base + a[0] * f.logs[0] + a[1] * f.logs[1] + a[2] * f.logs[2] +
         a[3] * f.logs[3];
}

struct LogSum {
  double max = -std::numeric_limits<double>::infinity();
  double sum = 0.0;

  void add(double g) {
    if (g > max) {
      sum = sum * std::exp(max - g) + 1.0;
      max = g;
    } else {
      sum += std::exp(g - max);
    }
  }
  double log() const { return max + std::log(sum); }
};

// log of the integral. `nodes(level, k, side)` yields the NodeFactors of one
// node; the traversal order is fixed so that any two node sources producing
// the same factors give bitwise-identical results.
template <class NodeSource>
double integrate_log(const std::array<double, 4>& a, const QuadratureConfig& cfg,
                     NodeSource&& nodes) {
  LogSum acc;
  double previous = std::numeric_limits<double>::quiet_NaN();
  for (int level = 0; level < cfg.levels; ++level) {
    const LevelTable& tab = level_table(level);
    const std::size_t count = tab.log_a.size();
    double center = -std::numeric_limits<double>::infinity();
    if (level == 0) {
      center = node_term(a, nodes(level, 0, 1));
      acc.add(center);
    }
    for (int side : {1, -1}) {
      double last = center;
      for (std::size_t k = level == 0 ? 1 : 0; k < count; ++k) {
        const double g = node_term(a, nodes(level, k, side));
        acc.add(g);
        if (g < acc.max - kTruncation && g < last) break;
        last = g;
      }
    }
    const double estimate = acc.log() + tab.log_step;
    if (level >= 2) {
      const double diff = std::fabs(estimate - previous);
      if (diff <= cfg.abs_tol || std::fabs(std::expm1(previous - estimate)) <= cfg.rel_tol) {
        return estimate;
      }
    }
    previous = estimate;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

[[noreturn]] void throw_nonconvergence(const BetaParams& params, double x, double y,
                                       int levels) {
  std::ostringstream msg;
  msg.precision(17);
  msg << "log_pdf: quadrature did not converge within " << levels
      << " levels for alpha=(" << params[0] << ", " << params[1] << ", " << params[2]
      << ", " << params[3] << ") at (" << x << ", " << y << ")";
  throw QuadratureError(msg.str());
}

double finish_log_pdf(double log_integral, double log_norm) {
  return std::max(kLogPdfFloor, log_integral - log_norm);
}

}  // namespace

BetaParams::BetaParams(double a1, double a2, double a3, double a4)
    : BetaParams(std::array<double, 4>{a1, a2, a3, a4}) {}

BetaParams::BetaParams(const std::array<double, 4>& a) : a_(a) {
  for (std::size_t j = 0; j < 4; ++j) {
    if (!(a_[j] >= kAlphaMin && a_[j] <= kAlphaMax)) {
      std::ostringstream msg;
      msg << "BetaParams: alpha" << (j + 1) << " = " << a_[j] << " outside ["
          << kAlphaMin << ", " << kAlphaMax << "]";
      throw std::invalid_argument(msg.str());
    }
  }
}

bool BetaParams::in_bounds(const std::array<double, 4>& a) {
  return std::all_of(a.begin(), a.end(),
                     [](double v) { return v >= kAlphaMin && v <= kAlphaMax; });
}

Point2::Point2(double x, double y) : x_(x), y_(y) {
  if (!(x > 0.0 && x < 1.0 && y > 0.0 && y < 1.0)) {
    std::ostringstream msg;
    msg << "Point2: (" << x << ", " << y << ") is not inside the open unit square";
    throw std::invalid_argument(msg.str());
  }
}

void QuadratureConfig::validate() const {
  if (levels < 3 || levels > kMaxLevels) {
    throw std::invalid_argument("QuadratureConfig: levels must be in [3, " +
                                std::to_string(kMaxLevels) + "]");
  }
  if (!(abs_tol > 0.0) || !(rel_tol > 0.0)) {
    throw std::invalid_argument("QuadratureConfig: tolerances must be positive");
  }
}

double log_beta_norm(const BetaParams& params) {
  return std::lgamma(params[0]) + std::lgamma(params[1]) + std::lgamma(params[2]) +
         std::lgamma(params[3]) - std::lgamma(params.sum());
}

Interval support_interval(const Point2& p) {
  return {std::max(0.0, p.x() + p.y() - 1.0), std::min(p.x(), p.y())};
}

double log_pdf(const BetaParams& params, const Point2& p, const QuadratureConfig& cfg) {
  cfg.validate();
  const Geometry geo = make_geometry(p.x(), p.y());
  const double log_integral =
      integrate_log(params.values(), cfg, [&](int level, std::size_t k, int side) {
        return node_factors(geo, level_table(level), k, side);
      });
  if (std::isnan(log_integral)) throw_nonconvergence(params, p.x(), p.y(), cfg.levels);
  return finish_log_pdf(log_integral, log_beta_norm(params));
}

Mean2 mean(const BetaParams& params) {
  const double s = params.sum();
  return {(params[0] + params[1]) / s, (params[0] + params[2]) / s};
}

double covariance_xy(const BetaParams& params) {
  const double s = params.sum();
  return (params[0] * params[3] - params[1] * params[2]) / (s * s * (s + 1.0));
}

Mean2 variance(const BetaParams& params) {
  const double s = params.sum();
  const double denom = s * s * (s + 1.0);
  return {(params[0] + params[1]) * (params[2] + params[3]) / denom,
          (params[0] + params[2]) * (params[1] + params[3]) / denom};
}

double log_gamma_variate(double shape, Rng& rng) {
  if (!(shape > 0.0)) throw std::invalid_argument("log_gamma_variate: shape must be > 0");
  if (shape < 1.0) {
    return log_gamma_variate(shape + 1.0, rng) + std::log(rng.uniform_open()) / shape;
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double z;
    double v;
    do {
      z = rng.normal();
      v = 1.0 + c * z;
    } while (v <= 0.0);
    v = v * v * v;
    const double log_u = std::log(rng.uniform_open());
    if (log_u < 0.5 * z * z + d - d * v + d * std::log(v)) {
      return std::log(d) + std::log(v);
    }
  }
}

std::array<double, 4> sample_dirichlet(const BetaParams& params, Rng& rng) {
  std::array<double, 4> logs{};
  for (std::size_t j = 0; j < 4; ++j) logs[j] = log_gamma_variate(params[j], rng);
  const double top = *std::max_element(logs.begin(), logs.end());
  std::array<double, 4> u{};
  double total = 0.0;
  for (std::size_t j = 0; j < 4; ++j) {
    u[j] = std::exp(logs[j] - top);
    total += u[j];
  }
  for (double& v : u) v /= total;
  return u;
}

Point2 sample_one(const BetaParams& params, Rng& rng) {
  const auto u = sample_dirichlet(params, rng);
  auto clamp = [](double v) { return std::clamp(v, kSampleNudge, 1.0 - kSampleNudge); };
  return {clamp(u[0] + u[1]), clamp(u[0] + u[2])};
}

// ---------------------------------------------------------------------------
// DensityCache

struct DensityCache::Impl {
  QuadratureConfig cfg;
  std::vector<Point2> points;
  std::vector<Geometry> geometry;
  // nodes[i][level][side] grows lazily as walks reach further out.
  std::vector<std::array<std::array<std::vector<NodeFactors>, 2>, kCachedLevels>> nodes;

  const NodeFactors& cached(std::size_t i, int level, std::size_t k, int side) {
    auto& row = nodes[i][level][side > 0 ? 0 : 1];
    if (k >= row.size()) {
      const LevelTable& tab = level_table(level);
      row.reserve(std::min(tab.log_a.size(), std::max<std::size_t>(2 * k + 1, 16)));
      for (std::size_t m = row.size(); m <= k; ++m) {
        row.push_back(node_factors(geometry[i], tab, m, side));
      }
    }
    return row[k];
  }
};

DensityCache::DensityCache(std::span<const Point2> points, const QuadratureConfig& cfg)
    : impl_(std::make_unique<Impl>()) {
  cfg.validate();
  impl_->cfg = cfg;
  impl_->points.assign(points.begin(), points.end());
  impl_->geometry.reserve(points.size());
  for (const Point2& p : points) impl_->geometry.push_back(make_geometry(p.x(), p.y()));
  impl_->nodes.resize(points.size());
}

DensityCache::~DensityCache() = default;
DensityCache::DensityCache(DensityCache&&) noexcept = default;
DensityCache& DensityCache::operator=(DensityCache&&) noexcept = default;

std::size_t DensityCache::size() const { return impl_->points.size(); }

double DensityCache::log_pdf(const BetaParams& params, std::size_t i) {
  return log_pdf(params, i, log_beta_norm(params));
}

double DensityCache::log_pdf(const BetaParams& params, std::size_t i, double log_norm) {
  Impl& im = *impl_;
  const double log_integral =
      integrate_log(params.values(), im.cfg, [&](int level, std::size_t k, int side) {
        if (level < kCachedLevels) return im.cached(i, level, k, side);
        return node_factors(im.geometry[i], level_table(level), k, side);
      });
  if (std::isnan(log_integral)) {
    throw_nonconvergence(params, im.points[i].x(), im.points[i].y(), im.cfg.levels);
  }
  return finish_log_pdf(log_integral, log_norm);
}

}  // namespace betamix
