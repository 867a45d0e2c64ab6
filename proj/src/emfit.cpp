#include "betamix/emfit.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>

#include "betamix/baselines.hpp"

namespace betamix {

namespace {

constexpr double kWeightSumTol = 1e-12;
constexpr double kEmptyClusterMass = 1e-6;
// Points with a smaller responsibility are left out of a cluster's M-step
// objective; their total contribution is below 1e-14 * N * 745.
constexpr double kNegligibleWeight = 1e-14;
constexpr double kSeedConcentration = 4.0;

double log_sum_exp(std::span<const double> v) {
  const double top = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(top)) return top;
  double s = 0.0;
  for (double x : v) s += std::exp(x - top);
  return top + std::log(s);
}

// Density evaluation over one data set, shared by every step of a fit.
class Engine {
 public:
  Engine(const DataMatrix& data, const QuadratureConfig& cfg)
      : data_(data), cache_(data.points(), cfg) {}

  const DataMatrix& data() const { return data_; }

  double log_pdf(const BetaParams& params, std::size_t n, double log_norm) {
    return cache_.log_pdf(params, n, log_norm);
  }

  // log pi_c + log f(x_n | theta_c), row-major N x C.
  std::vector<double> joint_log_terms(const MixtureModel& model) {
    const std::size_t clusters = model.clusters();
    std::vector<double> terms(data_.size() * clusters);
    for (std::size_t c = 0; c < clusters; ++c) {
      const BetaParams& params = model.components()[c];
      const double log_norm = log_beta_norm(params);
      const double log_weight = std::log(model.weights()[c]);
      for (std::size_t n = 0; n < data_.size(); ++n) {
        double lp;
        try {
          lp = cache_.log_pdf(params, n, log_norm);
        } catch (const QuadratureError& e) {
          throw QuadratureError("point " + std::to_string(n) + ", cluster " +
                                std::to_string(c) + ": " + e.what());
        }
        terms[n * clusters + c] = log_weight + lp;
      }
    }
    return terms;
  }

  // E-step; returns the responsibilities and the log-likelihood.
  std::pair<Responsibilities, double> expectation(const MixtureModel& model) {
    const std::size_t clusters = model.clusters();
    const std::vector<double> terms = joint_log_terms(model);
    Responsibilities resp(data_.size(), clusters);
    double ll = 0.0;
    for (std::size_t n = 0; n < data_.size(); ++n) {
      std::span<const double> row(terms.data() + n * clusters, clusters);
      const double lse = log_sum_exp(row);
      ll += lse;
      bool underflow = true;
      for (std::size_t c = 0; c < clusters; ++c) {
        if (model.weights()[c] > 0.0 && row[c] - std::log(model.weights()[c]) > kLogPdfFloor) {
          underflow = false;
        }
      }
      if (underflow) {
        for (std::size_t c = 0; c < clusters; ++c) resp(n, c) = 1.0 / static_cast<double>(clusters);
        resp.mark_degenerate(n);
        continue;
      }
      for (std::size_t c = 0; c < clusters; ++c) resp(n, c) = std::exp(row[c] - lse);
    }
    return {std::move(resp), ll};
  }

  double log_likelihood(const MixtureModel& model) {
    const std::size_t clusters = model.clusters();
    const std::vector<double> terms = joint_log_terms(model);
    double ll = 0.0;
    for (std::size_t n = 0; n < data_.size(); ++n) {
      ll += log_sum_exp(std::span<const double>(terms.data() + n * clusters, clusters));
    }
    return ll;
  }

 private:
  const DataMatrix& data_;
  DensityCache cache_;
};

struct MStepOutcome {
  MixtureModel model;
  std::vector<std::size_t> reseeded;
};

BetaParams optimize_component(Engine& engine, const BetaParams& start,
                              std::span<const double> weights, const OptimOptions& options) {
  std::vector<std::size_t> active;
  for (std::size_t n = 0; n < weights.size(); ++n) {
    if (weights[n] > kNegligibleWeight) active.push_back(n);
  }
  const Objective4 objective = [&](const Vec4& v) {
    if (!BetaParams::in_bounds(v)) return -std::numeric_limits<double>::infinity();
    const BetaParams params(v);
    const double log_norm = log_beta_norm(params);
    double q = 0.0;
    try {
      for (std::size_t n : active) q += weights[n] * engine.log_pdf(params, n, log_norm);
    } catch (const QuadratureError&) {
      return -std::numeric_limits<double>::infinity();
    }
    return q;
  };
  if (!std::isfinite(objective(start.values()))) return start;
  const OptimReport report =
      maximize(objective, start.values(), Bounds4::alpha_defaults(), options);
  return BetaParams(report.argmax);
}

MStepOutcome maximization(Engine& engine, const MixtureModel& model,
                          const Responsibilities& resp, const FitConfig& cfg) {
  const DataMatrix& data = engine.data();
  const std::size_t clusters = model.clusters();
  const std::size_t n_points = data.size();
  std::vector<BetaParams> components = model.components();
  std::vector<std::size_t> empty;

  std::vector<double> column(n_points);
  for (std::size_t c = 0; c < clusters; ++c) {
    double mass = 0.0;
    for (std::size_t n = 0; n < n_points; ++n) {
      column[n] = resp(n, c);
      mass += column[n];
    }
    if (mass < kEmptyClusterMass * static_cast<double>(n_points)) {
      empty.push_back(c);
      continue;
    }
    components[c] = optimize_component(engine, components[c], column, cfg.optim);
  }
  if (empty.empty()) return {MixtureModel(model.weights(), std::move(components)), {}};

  // Re-seed empty clusters on the worst-explained points of the current model.
  const std::vector<double> terms = engine.joint_log_terms(model);
  std::vector<std::pair<double, std::size_t>> fit_quality(n_points);
  for (std::size_t n = 0; n < n_points; ++n) {
    fit_quality[n] = {log_sum_exp(std::span<const double>(terms.data() + n * clusters, clusters)),
                      n};
  }
  std::sort(fit_quality.begin(), fit_quality.end());

  std::vector<double> weights = model.weights();
  const double seed_weight = 1.0 / static_cast<double>(n_points);
  double kept = 0.0;
  for (std::size_t c = 0; c < clusters; ++c) {
    if (std::find(empty.begin(), empty.end(), c) == empty.end()) kept += weights[c];
  }
  const double scale = (1.0 - seed_weight * static_cast<double>(empty.size())) / kept;
  for (double& w : weights) w *= scale;
  for (std::size_t i = 0; i < empty.size(); ++i) {
    const Point2& p = data[fit_quality[i % n_points].second];
    components[empty[i]] = moment_seed(p.x(), p.y());
    weights[empty[i]] = seed_weight;
  }
  double total = 0.0;
  for (double w : weights) total += w;
  for (double& w : weights) w /= total;
  return {MixtureModel(std::move(weights), std::move(components)), std::move(empty)};
}

FitResult run_em(Engine& engine, const MixtureModel& init, const FitConfig& cfg) {
  MixtureModel model = init;
  FitTrace trace;
  double old_ll = -std::numeric_limits<double>::infinity();
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    auto [resp, ll] = engine.expectation(model);
    trace.log_likelihood_per_epoch.push_back(ll);
    if (std::fabs(ll - old_ll) < cfg.conv_tol) {
      trace.converged = true;
      trace.epochs_run = static_cast<int>(trace.log_likelihood_per_epoch.size());
      return {std::move(model), std::move(resp), std::move(trace), ll, 0};
    }
    old_ll = ll;

    const MixtureModel weighted(m_step_weights(resp), model.components());
    MStepOutcome outcome = maximization(engine, weighted, resp, cfg);
    if (!outcome.reseeded.empty()) {
      // Keep a re-seed only if it does not lower the likelihood.
      std::vector<BetaParams> components = outcome.model.components();
      for (std::size_t c : outcome.reseeded) components[c] = weighted.components()[c];
      MixtureModel plain(weighted.weights(), std::move(components));
      if (engine.log_likelihood(outcome.model) < engine.log_likelihood(plain)) {
        outcome.model = std::move(plain);
      }
    }
    model = std::move(outcome.model);
  }
  auto [resp, ll] = engine.expectation(model);
  trace.epochs_run = static_cast<int>(trace.log_likelihood_per_epoch.size());
  return {std::move(model), std::move(resp), std::move(trace), ll, 0};
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

std::vector<std::string> split_words(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> words;
  for (std::string w; in >> w;) words.push_back(w);
  return words;
}

double parse_number(const std::string& token, const std::string& field) {
  double v = 0.0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  if (!token.empty() && *first == '+') ++first;
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last) {
    throw ModelFormatError(field + ": '" + token + "' is not a number");
  }
  return v;
}

}  // namespace

DataMatrix::DataMatrix(std::vector<Point2> points) : points_(std::move(points)) {
  if (points_.empty()) throw std::invalid_argument("DataMatrix: no points");
}

MixtureModel::MixtureModel(std::vector<double> weights, std::vector<BetaParams> components)
    : weights_(std::move(weights)), components_(std::move(components)) {
  if (weights_.empty()) throw std::invalid_argument("MixtureModel: no clusters");
  if (weights_.size() != components_.size()) {
    throw std::invalid_argument("MixtureModel: weight and component counts differ");
  }
  double total = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0 && w <= 1.0)) {
      throw std::invalid_argument("MixtureModel: weight " + format_double(w) +
                                  " outside [0, 1]");
    }
    total += w;
  }
  if (!(std::fabs(total - 1.0) <= kWeightSumTol)) {
    throw std::invalid_argument("MixtureModel: weights sum to " + format_double(total) +
                                ", expected 1");
  }
}

Responsibilities::Responsibilities(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), gamma_(rows * cols, 0.0) {}

void FitConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("FitConfig: epochs must be >= 1");
  if (!(conv_tol > 0.0)) throw std::invalid_argument("FitConfig: conv_tol must be > 0");
  if (restarts < 1) throw std::invalid_argument("FitConfig: restarts must be >= 1");
  quadrature.validate();
}

double log_likelihood(const MixtureModel& model, const DataMatrix& data,
                      const QuadratureConfig& cfg) {
  Engine engine(data, cfg);
  return engine.log_likelihood(model);
}

Responsibilities e_step(const MixtureModel& model, const DataMatrix& data,
                        const QuadratureConfig& cfg) {
  Engine engine(data, cfg);
  return engine.expectation(model).first;
}

std::vector<double> m_step_weights(const Responsibilities& resp) {
  std::vector<double> weights(resp.cols(), 0.0);
  for (std::size_t n = 0; n < resp.rows(); ++n) {
    for (std::size_t c = 0; c < resp.cols(); ++c) weights[c] += resp(n, c);
  }
  double total = 0.0;
  for (double& w : weights) {
    w /= static_cast<double>(resp.rows());
    total += w;
  }
  for (double& w : weights) w /= total;
  return weights;
}

MixtureModel m_step_components(const MixtureModel& model, const DataMatrix& data,
                               const Responsibilities& resp, const FitConfig& cfg) {
  if (resp.rows() != data.size() || resp.cols() != model.clusters()) {
    throw std::invalid_argument("m_step_components: responsibilities shape mismatch");
  }
  Engine engine(data, cfg.quadrature);
  return maximization(engine, model, resp, cfg).model;
}

BetaParams moment_seed(double mx, double my) {
  auto clamp = [](double v) { return std::clamp(v, kAlphaMin, kAlphaMax); };
  const double s = kSeedConcentration;
  return BetaParams(clamp(s * mx * my), clamp(s * mx * (1.0 - my)),
                    clamp(s * (1.0 - mx) * my), clamp(s * (1.0 - mx) * (1.0 - my)));
}

MixtureModel initial_model(const DataMatrix& data, std::size_t clusters, std::uint64_t seed,
                           int kmeans_iters) {
  const KMeansModel km = kmeans_fit(data.points(), clusters, seed, kmeans_iters);
  const std::vector<int> labels = kmeans_predict(km, data.points());
  std::vector<double> counts(clusters, 0.0);
  std::vector<Vec2> sums(clusters, Vec2{0.0, 0.0});
  for (std::size_t n = 0; n < data.size(); ++n) {
    counts[labels[n]] += 1.0;
    sums[labels[n]][0] += data[n].x();
    sums[labels[n]][1] += data[n].y();
  }
  std::vector<double> weights(clusters);
  std::vector<BetaParams> components;
  components.reserve(clusters);
  for (std::size_t c = 0; c < clusters; ++c) {
    weights[c] = counts[c] / static_cast<double>(data.size());
    if (counts[c] > 0.0) {
      components.push_back(moment_seed(sums[c][0] / counts[c], sums[c][1] / counts[c]));
    } else {
      components.push_back(moment_seed(km.centroids[c][0], km.centroids[c][1]));
    }
  }
  double total = 0.0;
  for (double w : weights) total += w;
  for (double& w : weights) w /= total;
  return MixtureModel(std::move(weights), std::move(components));
}

FitResult fit_from(const MixtureModel& init, const DataMatrix& data, const FitConfig& cfg) {
  cfg.validate();
  Engine engine(data, cfg.quadrature);
  return run_em(engine, init, cfg);
}

FitResult fit(const DataMatrix& data, std::size_t clusters, const FitConfig& cfg) {
  cfg.validate();
  if (clusters < 1) throw std::invalid_argument("fit: need at least one cluster");
  if (data.size() < clusters) {
    throw std::invalid_argument("fit: " + std::to_string(data.size()) +
                                " points cannot form " + std::to_string(clusters) +
                                " clusters");
  }
  Engine engine(data, cfg.quadrature);
  std::optional<FitResult> best;
  for (int r = 0; r < cfg.restarts; ++r) {
    const MixtureModel init =
        initial_model(data, clusters, mix_seed(cfg.seed, static_cast<std::uint64_t>(r)),
                      cfg.kmeans_iters);
    FitResult result = run_em(engine, init, cfg);
    result.restart = r;
    if (!best || result.log_likelihood > best->log_likelihood) best = std::move(result);
  }
  return std::move(*best);
}

std::vector<int> predict(const Responsibilities& resp) {
  std::vector<int> labels(resp.rows());
  for (std::size_t n = 0; n < resp.rows(); ++n) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < resp.cols(); ++c) {
      if (resp(n, c) > resp(n, best)) best = c;
    }
    labels[n] = static_cast<int>(best);
  }
  return labels;
}

std::vector<int> predict(const MixtureModel& model, const DataMatrix& data,
                         const QuadratureConfig& cfg) {
  return predict(e_step(model, data, cfg));
}

Sample sample(const MixtureModel& model, std::size_t n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("sample: n must be >= 1");
  std::vector<Point2> points;
  std::vector<int> labels;
  points.reserve(n);
  labels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t z = rng.categorical(model.weights());
    points.push_back(sample_one(model.components()[z], rng));
    labels.push_back(static_cast<int>(z));
  }
  return {DataMatrix(std::move(points)), std::move(labels)};
}

std::string save_model(const MixtureModel& model) {
  std::ostringstream out;
  out << kModelFormat << '\n';
  out << "clusters " << model.clusters() << '\n';
  out << "weights";
  for (double w : model.weights()) out << ' ' << format_double(w);
  out << '\n';
  for (const BetaParams& p : model.components()) {
    out << "alpha";
    for (double a : p.values()) out << ' ' << format_double(a);
    out << '\n';
  }
  return out.str();
}

MixtureModel load_model(const std::string& document) {
  std::istringstream in(document);
  std::vector<std::vector<std::string>> lines;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto words = split_words(line);
    if (words.empty() || words[0].starts_with('#')) continue;
    lines.push_back(std::move(words));
  }
  if (lines.empty() || lines[0].size() != 1 || lines[0][0] != kModelFormat) {
    throw ModelFormatError(std::string("header: expected '") + kModelFormat + "'");
  }
  if (lines.size() < 2 || lines[1].size() != 2 || lines[1][0] != "clusters") {
    throw ModelFormatError("clusters: expected 'clusters <C>'");
  }
  const double c_value = parse_number(lines[1][1], "clusters");
  if (!(c_value >= 1.0) || c_value != std::floor(c_value) || c_value > 1e6) {
    throw ModelFormatError("clusters: must be a positive integer");
  }
  const auto clusters = static_cast<std::size_t>(c_value);
  if (lines.size() != 3 + clusters) {
    throw ModelFormatError("document: expected a weights line and " + std::to_string(clusters) +
                           " alpha lines");
  }
  if (lines[2][0] != "weights" || lines[2].size() != clusters + 1) {
    throw ModelFormatError("weights: expected 'weights' followed by " +
                           std::to_string(clusters) + " values");
  }
  std::vector<double> weights;
  double total = 0.0;
  for (std::size_t c = 0; c < clusters; ++c) {
    const std::string field = "weights[" + std::to_string(c) + "]";
    const double w = parse_number(lines[2][c + 1], field);
    if (!(w >= 0.0 && w <= 1.0)) throw ModelFormatError(field + ": must lie in [0, 1]");
    weights.push_back(w);
    total += w;
  }
  if (!(std::fabs(total - 1.0) <= kWeightSumTol)) {
    throw ModelFormatError("weights: sum is " + format_double(total) + ", expected 1");
  }
  std::vector<BetaParams> components;
  for (std::size_t c = 0; c < clusters; ++c) {
    const auto& words = lines[3 + c];
    if (words[0] != "alpha" || words.size() != 5) {
      throw ModelFormatError("alpha[" + std::to_string(c) + "]: expected 'alpha a1 a2 a3 a4'");
    }
    std::array<double, 4> a{};
    for (std::size_t j = 0; j < 4; ++j) {
      const std::string field =
          "alpha[" + std::to_string(c) + "][" + std::to_string(j + 1) + "]";
      a[j] = parse_number(words[j + 1], field);
      if (!(a[j] >= kAlphaMin)) {
        throw ModelFormatError(field + ": " + words[j + 1] + " is below ALPHA_MIN=" +
                               format_double(kAlphaMin));
      }
      if (!(a[j] <= kAlphaMax)) {
        throw ModelFormatError(field + ": " + words[j + 1] + " is above ALPHA_MAX=" +
                               format_double(kAlphaMax));
      }
    }
    components.emplace_back(a);
  }
  return MixtureModel(std::move(weights), std::move(components));
}

void save_model_file(const MixtureModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << save_model(model);
}

MixtureModel load_model_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_model(buf.str());
}

}  // namespace betamix
