#pragma once

// Flexible bivariate beta mixture model: mixture density, EM fitting,
// prediction, sampling and the text model document.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "betamix/bbeta.hpp"
#include "betamix/optim.hpp"
#include "betamix/rng.hpp"

namespace betamix {

/// N >= 1 points of the open unit square.
class DataMatrix {
 public:
  explicit DataMatrix(std::vector<Point2> points);

  std::size_t size() const { return points_.size(); }
  const Point2& operator[](std::size_t n) const { return points_[n]; }
  std::span<const Point2> points() const { return points_; }

 private:
  std::vector<Point2> points_;
};

/// Mixing weights (summing to one within 1e-12) and one BetaParams per cluster.
class MixtureModel {
 public:
  MixtureModel(std::vector<double> weights, std::vector<BetaParams> components);

  std::size_t clusters() const { return weights_.size(); }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<BetaParams>& components() const { return components_; }

  friend bool operator==(const MixtureModel&, const MixtureModel&) = default;

 private:
  std::vector<double> weights_;
  std::vector<BetaParams> components_;
};

/// N x C posterior membership probabilities, row-major.
class Responsibilities {
 public:
  Responsibilities(std::size_t rows, std::size_t cols);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double operator()(std::size_t n, std::size_t c) const { return gamma_[n * cols_ + c]; }
  double& operator()(std::size_t n, std::size_t c) { return gamma_[n * cols_ + c]; }
  std::span<const double> row(std::size_t n) const {
    return {gamma_.data() + n * cols_, cols_};
  }

  /// Points whose density underflowed under every component; their rows are uniform.
  const std::vector<std::size_t>& degenerate_rows() const { return degenerate_; }
  void mark_degenerate(std::size_t n) { degenerate_.push_back(n); }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> gamma_;
  std::vector<std::size_t> degenerate_;
};

struct FitConfig {
  int epochs = 200;
  double conv_tol = 1e-4;  // on the total log-likelihood
  std::uint64_t seed = 42;
  int restarts = 3;
  int kmeans_iters = 50;
  OptimOptions optim{};
  QuadratureConfig quadrature{};

  void validate() const;
};

struct FitTrace {
  std::vector<double> log_likelihood_per_epoch;
  int epochs_run = 0;
  bool converged = false;
};

struct FitResult {
  MixtureModel model;
  Responsibilities responsibilities;  // of `model`
  FitTrace trace;
  double log_likelihood;  // of `model`
  int restart = 0;        // index of the winning restart
};

/// Sum over points of log sum_c pi_c f(x_n | theta_c).
double log_likelihood(const MixtureModel& model, const DataMatrix& data,
                      const QuadratureConfig& cfg = {});

/// Posterior membership probabilities, computed in log space per row.
Responsibilities e_step(const MixtureModel& model, const DataMatrix& data,
                        const QuadratureConfig& cfg = {});

/// pi_c = mean over rows of gamma_{n,c}.
std::vector<double> m_step_weights(const Responsibilities& resp);

/// Maximizes sum_n gamma_{n,c} log f(x_n | theta) for each cluster starting at
/// the current theta_c. A cluster whose responsibility mass is below 1e-6 N is
/// re-seeded at the worst-explained point and given weight 1/N.
MixtureModel m_step_components(const MixtureModel& model, const DataMatrix& data,
                               const Responsibilities& resp, const FitConfig& cfg = {});

/// Product-form seed with concentration s = 4 centred on (mx, my), clamped
/// into the shape bounds. Its mean is (mx, my) when no clamping occurs.
BetaParams moment_seed(double mx, double my);

/// k-means initialization: weights from cluster fractions, components from
/// moment_seed at the cluster means.
MixtureModel initial_model(const DataMatrix& data, std::size_t clusters, std::uint64_t seed,
                           int kmeans_iters = 50);

/// One EM run from a given starting model (no restarts).
FitResult fit_from(const MixtureModel& init, const DataMatrix& data, const FitConfig& cfg);

/// EM with cfg.restarts k-means initializations; returns the run with the
/// highest final log-likelihood.
FitResult fit(const DataMatrix& data, std::size_t clusters, const FitConfig& cfg = {});

/// Row argmax, ties to the lowest cluster index.
std::vector<int> predict(const Responsibilities& resp);
std::vector<int> predict(const MixtureModel& model, const DataMatrix& data,
                         const QuadratureConfig& cfg = {});

struct Sample {
  DataMatrix data;
  std::vector<int> labels;
};

/// Draws z ~ Categorical(pi), then x ~ f(. | theta_z), n times.
Sample sample(const MixtureModel& model, std::size_t n, Rng& rng);

inline constexpr const char* kModelFormat = "fbbmm-model/1";

/// Text document; see README for the grammar.
std::string save_model(const MixtureModel& model);
MixtureModel load_model(const std::string& document);

void save_model_file(const MixtureModel& model, const std::filesystem::path& path);
MixtureModel load_model_file(const std::filesystem::path& path);

/// Thrown by load_model for malformed or invariant-violating documents.
class ModelFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace betamix
