#include "betamix/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace betamix {

namespace {

double squared_distance(const Point2& p, const Vec2& c) {
  const double dx = p.x() - c[0];
  const double dy = p.y() - c[1];
  return dx * dx + dy * dy;
}

std::size_t nearest(const Point2& p, std::span<const Vec2> centroids) {
  std::size_t best = 0;
  double best_d = squared_distance(p, centroids[0]);
  for (std::size_t c = 1; c < centroids.size(); ++c) {
    const double d = squared_distance(p, centroids[c]);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

void check_sizes(std::span<const Point2> data, std::size_t clusters) {
  if (clusters == 0) throw std::invalid_argument("cluster count must be at least 1");
  if (data.size() < clusters) {
    throw std::invalid_argument("need at least as many points as clusters");
  }
}

double log_sum_exp(std::span<const double> v) {
  const double top = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(top)) return top;
  double s = 0.0;
  for (double x : v) s += std::exp(x - top);
  return top + std::log(s);
}

double gaussian_log_density(const Point2& p, const Vec2& mean, const Cov2& cov) {
  const double det = cov.xx * cov.yy - cov.xy * cov.xy;
  const double dx = p.x() - mean[0];
  const double dy = p.y() - mean[1];
  const double maha = (cov.yy * dx * dx - 2.0 * cov.xy * dx * dy + cov.xx * dy * dy) / det;
  return -std::log(2.0 * std::numbers::pi) - 0.5 * std::log(det) - 0.5 * maha;
}

// Log joint terms log pi_c + log N(x_n | c), row-major N x C.
std::vector<double> joint_log_terms(const GaussianMixtureModel& model,
                                    std::span<const Point2> data) {
  const std::size_t clusters = model.weights.size();
  std::vector<double> out(data.size() * clusters);
  for (std::size_t n = 0; n < data.size(); ++n) {
    for (std::size_t c = 0; c < clusters; ++c) {
      out[n * clusters + c] = std::log(model.weights[c]) +
                              gaussian_log_density(data[n], model.means[c], model.covariances[c]);
    }
  }
  return out;
}

// Responsibilities in place; returns the log-likelihood.
double normalize_rows(std::vector<double>& terms, std::size_t clusters) {
  double ll = 0.0;
  for (std::size_t row = 0; row * clusters < terms.size(); ++row) {
    std::span<double> r(terms.data() + row * clusters, clusters);
    const double lse = log_sum_exp(r);
    ll += lse;
    for (double& v : r) v = std::exp(v - lse);
  }
  return ll;
}

std::vector<int> argmax_rows(std::span<const double> resp, std::size_t clusters) {
  std::vector<int> labels(resp.size() / clusters);
  for (std::size_t n = 0; n < labels.size(); ++n) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < clusters; ++c) {
      if (resp[n * clusters + c] > resp[n * clusters + best]) best = c;
    }
    labels[n] = static_cast<int>(best);
  }
  return labels;
}

// Weighted mean and regularized covariance from responsibility column c.
void gaussian_m_step(std::span<const Point2> data, std::span<const double> resp,
                     std::size_t clusters, GaussianMixtureModel& model) {
  const double n_total = static_cast<double>(data.size());
  for (std::size_t c = 0; c < clusters; ++c) {
    double w = 0.0;
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t n = 0; n < data.size(); ++n) {
      const double g = resp[n * clusters + c];
      w += g;
      mx += g * data[n].x();
      my += g * data[n].y();
    }
    if (w <= 0.0) {
      // Dead component: keep its shape, give it a negligible weight.
      model.weights[c] = std::numeric_limits<double>::min();
      continue;
    }
    mx /= w;
    my /= w;
    double sxx = 0.0;
    double sxy = 0.0;
    double syy = 0.0;
    for (std::size_t n = 0; n < data.size(); ++n) {
      const double g = resp[n * clusters + c];
      const double dx = data[n].x() - mx;
      const double dy = data[n].y() - my;
      sxx += g * dx * dx;
      sxy += g * dx * dy;
      syy += g * dy * dy;
    }
    model.weights[c] = w / n_total;
    model.means[c] = {mx, my};
    model.covariances[c] = {sxx / w + kGmmRegularization, sxy / w,
                            syy / w + kGmmRegularization};
  }
  double total = 0.0;
  for (double v : model.weights) total += v;
  for (double& v : model.weights) v /= total;
}

}  // namespace

std::vector<Vec2> kmeans_plus_plus(std::span<const Point2> data, std::size_t clusters,
                                   Rng& rng) {
  check_sizes(data, clusters);
  std::vector<Vec2> centroids;
  centroids.reserve(clusters);
  const Point2& first = data[rng.index(data.size())];
  centroids.push_back({first.x(), first.y()});
  std::vector<double> d2(data.size());
  for (std::size_t n = 0; n < data.size(); ++n) d2[n] = squared_distance(data[n], centroids[0]);
  while (centroids.size() < clusters) {
    double total = 0.0;
    for (double v : d2) total += v;
    const std::size_t pick = total > 0.0 ? rng.categorical(d2) : rng.index(data.size());
    centroids.push_back({data[pick].x(), data[pick].y()});
    for (std::size_t n = 0; n < data.size(); ++n) {
      d2[n] = std::min(d2[n], squared_distance(data[n], centroids.back()));
    }
  }
  return centroids;
}

double kmeans_inertia(std::span<const Vec2> centroids, std::span<const Point2> data) {
  double total = 0.0;
  for (const Point2& p : data) total += squared_distance(p, centroids[nearest(p, centroids)]);
  return total;
}

KMeansModel kmeans_fit(std::span<const Point2> data, std::size_t clusters,
                       std::uint64_t seed, int iters) {
  check_sizes(data, clusters);
  Rng rng(seed);
  KMeansModel model;
  model.centroids = kmeans_plus_plus(data, clusters, rng);
  model.inertia = kmeans_inertia(model.centroids, data);
  model.inertia_history.push_back(model.inertia);

  std::vector<std::size_t> assign(data.size(), clusters);
  for (int it = 0; it < iters; ++it) {
    bool changed = false;
    for (std::size_t n = 0; n < data.size(); ++n) {
      const std::size_t c = nearest(data[n], model.centroids);
      if (c != assign[n]) {
        assign[n] = c;
        changed = true;
      }
    }
    if (!changed) break;

    std::vector<Vec2> sums(clusters, Vec2{0.0, 0.0});
    std::vector<std::size_t> counts(clusters, 0);
    for (std::size_t n = 0; n < data.size(); ++n) {
      sums[assign[n]][0] += data[n].x();
      sums[assign[n]][1] += data[n].y();
      ++counts[assign[n]];
    }
    for (std::size_t c = 0; c < clusters; ++c) {
      if (counts[c] > 0) {
        model.centroids[c] = {sums[c][0] / static_cast<double>(counts[c]),
                              sums[c][1] / static_cast<double>(counts[c])};
        continue;
      }
      // Empty cluster: move it onto the point farthest from its centroid.
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t n = 0; n < data.size(); ++n) {
        const double d = squared_distance(data[n], model.centroids[assign[n]]);
        if (d > far_d) {
          far_d = d;
          far = n;
        }
      }
      model.centroids[c] = {data[far].x(), data[far].y()};
      assign[far] = c;
    }
    model.inertia = kmeans_inertia(model.centroids, data);
    model.inertia_history.push_back(model.inertia);
  }
  model.inertia = kmeans_inertia(model.centroids, data);
  return model;
}

std::vector<int> kmeans_predict(const KMeansModel& model, std::span<const Point2> data) {
  std::vector<int> labels(data.size());
  for (std::size_t n = 0; n < data.size(); ++n) {
    labels[n] = static_cast<int>(nearest(data[n], model.centroids));
  }
  return labels;
}

GaussianMixtureModel gmm_fit(std::span<const Point2> data, std::size_t clusters,
                             std::uint64_t seed, int epochs, double tol) {
  check_sizes(data, clusters);
  const KMeansModel init = kmeans_fit(data, clusters, seed);
  const std::vector<int> labels = kmeans_predict(init, data);

  GaussianMixtureModel model;
  model.weights.assign(clusters, 0.0);
  model.means.assign(clusters, Vec2{0.0, 0.0});
  model.covariances.assign(clusters, Cov2{1.0, 0.0, 1.0});
  std::vector<double> resp(data.size() * clusters, 0.0);
  for (std::size_t n = 0; n < data.size(); ++n) resp[n * clusters + labels[n]] = 1.0;
  gaussian_m_step(data, resp, clusters, model);

  double old_ll = -std::numeric_limits<double>::infinity();
  for (int epoch = 0; epoch < epochs; ++epoch) {
    resp = joint_log_terms(model, data);
    const double ll = normalize_rows(resp, clusters);
    model.log_likelihood_trace.push_back(ll);
    if (std::fabs(ll - old_ll) < tol) {
      model.converged = true;
      break;
    }
    old_ll = ll;
    gaussian_m_step(data, resp, clusters, model);
  }
  return model;
}

std::vector<double> gmm_responsibilities(const GaussianMixtureModel& model,
                                         std::span<const Point2> data) {
  std::vector<double> resp = joint_log_terms(model, data);
  normalize_rows(resp, model.weights.size());
  return resp;
}

std::vector<int> gmm_predict(const GaussianMixtureModel& model, std::span<const Point2> data) {
  return argmax_rows(gmm_responsibilities(model, data), model.weights.size());
}

double gmm_log_likelihood(const GaussianMixtureModel& model, std::span<const Point2> data) {
  std::vector<double> terms = joint_log_terms(model, data);
  return normalize_rows(terms, model.weights.size());
}

}  // namespace betamix
