#pragma once

// k-means and full-covariance Gaussian mixture baselines on 2D points.

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "betamix/bbeta.hpp"
#include "betamix/rng.hpp"

namespace betamix {

using Vec2 = std::array<double, 2>;

struct KMeansModel {
  std::vector<Vec2> centroids;
  double inertia = 0.0;
  // Inertia of the seeding followed by one entry per Lloyd iteration.
  std::vector<double> inertia_history;
};

/// k-means++ seeding: the first centroid uniformly, each further one with
/// probability proportional to the squared distance to the nearest chosen.
std::vector<Vec2> kmeans_plus_plus(std::span<const Point2> data, std::size_t clusters,
                                   Rng& rng);

/// Sum of squared distances to the nearest centroid.
double kmeans_inertia(std::span<const Vec2> centroids, std::span<const Point2> data);

KMeansModel kmeans_fit(std::span<const Point2> data, std::size_t clusters,
                       std::uint64_t seed, int iters = 50);

/// Nearest centroid, ties to the lowest index.
std::vector<int> kmeans_predict(const KMeansModel& model, std::span<const Point2> data);

/// Symmetric 2x2 covariance stored as (xx, xy, yy).
struct Cov2 {
  double xx;
  double xy;
  double yy;
};

struct GaussianMixtureModel {
  std::vector<double> weights;
  std::vector<Vec2> means;
  std::vector<Cov2> covariances;
  std::vector<double> log_likelihood_trace;
  bool converged = false;
};

inline constexpr double kGmmRegularization = 1e-6;

/// EM with full covariances, initialized from kmeans_fit with the same seed.
GaussianMixtureModel gmm_fit(std::span<const Point2> data, std::size_t clusters,
                             std::uint64_t seed, int epochs = 200, double tol = 1e-4);

/// Row-major N x C posterior membership probabilities.
std::vector<double> gmm_responsibilities(const GaussianMixtureModel& model,
                                         std::span<const Point2> data);

/// Argmax responsibility, ties to the lowest index.
std::vector<int> gmm_predict(const GaussianMixtureModel& model,
                             std::span<const Point2> data);

double gmm_log_likelihood(const GaussianMixtureModel& model, std::span<const Point2> data);

}  // namespace betamix
