#include "betamix/cli.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <charconv>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <map>
#include <ostream>
#include <sstream>

#include "betamix/baselines.hpp"
#include "betamix/emfit.hpp"
#include "betamix/metrics.hpp"

namespace betamix::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

// Usage problems detected after parsing (bad sizes, malformed files).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string input;
  std::string output;
  std::string model;
  std::string dataset;
  std::string truth;
  std::string pred;
  std::size_t clusters = 2;
  std::uint64_t seed = 42;
  int epochs = 200;
  double tol = 1e-4;
  int restarts = 3;
  std::size_t n = 500;
  bool pca = false;
  bool labels = false;
  bool raw = false;
};

constexpr std::array<const char*, 10> kPalette = {
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::shared_ptr<spdlog::logger> logger() {
  auto log = spdlog::get("betamix");
  if (!log) log = spdlog::stderr_logger_st("betamix");
  const char* env = std::getenv("BETAMIX_LOG");
  const std::string level = env ? env : "error";
  if (level == "debug") {
    log->set_level(spdlog::level::debug);
  } else if (level == "info") {
    log->set_level(spdlog::level::info);
  } else {
    log->set_level(spdlog::level::err);
  }
  return log;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
}

// Resolved value of every option of a subcommand, defaults included.
json resolved_flags(const CLI::App& sub) {
  json flags = json::object();
  for (const CLI::Option* opt : sub.get_options()) {
    if (opt->get_lnames().empty()) continue;
    const std::string& key = opt->get_lnames().front();
    if (key == "help") continue;
    if (opt->get_expected_max() == 0) {
      flags[key] = opt->count() > 0;
    } else if (opt->count() > 0) {
      const auto& values = opt->results();
      std::string joined;
      for (std::size_t i = 0; i < values.size(); ++i) joined += (i ? "," : "") + values[i];
      flags[key] = joined;
    } else {
      flags[key] = opt->get_default_str();
    }
  }
  return flags;
}

struct Manifest {
  std::string command;
  json flags;
  std::uint64_t seed = 0;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  json extra = json::object();
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  void write(const fs::path& path) const {
    json doc;
    doc["command"] = command;
    doc["flags"] = flags;
    doc["seed"] = seed;
    doc["inputs"] = inputs;
    doc["outputs"] = outputs;
    for (const auto& [key, value] : extra.items()) doc[key] = value;
    doc["duration_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_text(path, doc.dump(2) + "\n");
  }
};

fs::path sidecar(const std::string& output, const char* suffix) { return output + suffix; }

// Features of a CSV as clustering input: PCA-reduced or checked to be 2D,
// then normalized unless `raw` is set.
RawMatrix prepare_features(const Options& o) {
  const RawMatrix raw = read_csv(o.input, o.labels);
  if (raw.rows == 0) throw InputError(o.input + ": no data rows");
  if (o.pca) return pca_2d(raw);
  if (raw.cols != 2) {
    throw InputError(fmt::format("{}: expected 2 feature columns, found {} (use --pca)",
                                 o.input, raw.cols));
  }
  if (o.raw) return raw;
  return normalize(raw);
}

int cmd_generate(const Options& o, Manifest& m) {
  const LabeledDataset ds = make_dataset(o.dataset, o.n, o.seed);
  write_csv(o.output, ds);
  m.outputs = {o.output};
  m.write(sidecar(o.output, ".manifest.json"));
  return kExitOk;
}

int cmd_fit(const Options& o, Manifest& m) {
  const RawMatrix features = prepare_features(o);
  if (o.clusters < 1) throw InputError("--clusters must be at least 1");
  if (features.rows < o.clusters) {
    throw InputError(fmt::format("{} points cannot fill {} clusters", features.rows, o.clusters));
  }
  const DataMatrix data = to_data_matrix(features);
  FitConfig cfg;
  cfg.epochs = o.epochs;
  cfg.conv_tol = o.tol;
  cfg.seed = o.seed;
  cfg.restarts = o.restarts;
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
  auto log = logger();
  log->info("fit: N={} C={} restarts={}", data.size(), o.clusters, o.restarts);
  const FitResult result = fit(data, o.clusters, cfg);
  log->info("fit: restart {} won, log-likelihood {}", result.restart, result.log_likelihood);

  std::string document = save_model(result.model);
  document += result.trace.converged
                  ? fmt::format("# converged after {} epochs\n", result.trace.epochs_run)
                  : fmt::format("# not converged after {} epochs\n", result.trace.epochs_run);
  write_text(o.output, document);

  std::string trace = "epoch,log_likelihood\n";
  const auto& path = result.trace.log_likelihood_per_epoch;
  for (std::size_t e = 0; e < path.size(); ++e) trace += fmt::format("{},{}\n", e + 1, path[e]);
  const fs::path trace_path = sidecar(o.output, ".trace.csv");
  write_text(trace_path, trace);

  m.inputs = {o.input};
  m.outputs = {o.output, trace_path.string()};
  m.extra["converged"] = result.trace.converged;
  m.extra["epochs_run"] = result.trace.epochs_run;
  m.extra["log_likelihood"] = result.log_likelihood;
  m.write(sidecar(o.output, ".manifest.json"));
  if (!result.trace.converged) {
    log->error("fit: no convergence within {} epochs", cfg.epochs);
    return kExitNonConvergence;
  }
  return kExitOk;
}

int cmd_predict(const Options& o, Manifest& m) {
  const MixtureModel model = load_model_file(o.model);
  const RawMatrix features = prepare_features(o);
  const DataMatrix data = to_data_matrix(features);
  const std::vector<int> labels = predict(model, data);
  write_csv(o.output, to_raw(data, &labels));
  m.inputs = {o.model, o.input};
  m.outputs = {o.output};
  m.write(sidecar(o.output, ".manifest.json"));
  return kExitOk;
}

int cmd_sample(const Options& o, Manifest& m) {
  if (o.n < 1) throw InputError("--n must be at least 1");
  const MixtureModel model = load_model_file(o.model);
  Rng rng(o.seed);
  const Sample s = sample(model, o.n, rng);
  write_csv(o.output, to_raw(s.data, &s.labels));
  m.inputs = {o.model};
  m.outputs = {o.output};
  m.write(sidecar(o.output, ".manifest.json"));
  return kExitOk;
}

int cmd_eval(const Options& o, Manifest& m, std::ostream& out) {
  const std::vector<int> truth = read_label_file(o.truth);
  const std::vector<int> pred = read_label_file(o.pred);
  if (truth.size() != pred.size()) {
    throw InputError(fmt::format("label files differ in length ({} vs {})", truth.size(),
                                 pred.size()));
  }
  if (truth.size() < 2) throw InputError("need at least 2 labels");
  const double ca = clustering_accuracy(truth, pred);
  const double ari = adjusted_rand_index(truth, pred);
  const double ami = adjusted_mutual_information(truth, pred);
  const std::string report = fmt::format("CA {:.6f}\nARI {:.6f}\nAMI {:.6f}\n", ca, ari, ami);
  out << report;
  if (!o.output.empty()) {
    write_text(o.output, fmt::format("CA,ARI,AMI\n{},{},{}\n", ca, ari, ami));
    m.inputs = {o.truth, o.pred};
    m.outputs = {o.output};
    m.write(sidecar(o.output, ".manifest.json"));
  }
  return kExitOk;
}

int cmd_bench(const Options& o, Manifest& m) {
  const fs::path dir = o.output;
  fs::create_directories(dir);
  auto log = logger();
  std::string metrics = "dataset,algorithm,CA,ARI,AMI\n";
  json timings = json::array();
  const auto& names = dataset_names();
  for (std::size_t d = 0; d < names.size(); ++d) {
    const std::string& name = names[d];
    const std::size_t clusters = name == "circles" ? 2 : 3;
    const LabeledDataset ds = make_dataset(name, o.n, mix_seed(o.seed, d));
    const auto points = ds.data.points();
    for (const char* algo : {"kmeans", "gmm", "fbbmm"}) {
      const auto start = std::chrono::steady_clock::now();
      std::vector<int> pred;
      if (std::string_view(algo) == "kmeans") {
        pred = kmeans_predict(kmeans_fit(points, clusters, o.seed), points);
      } else if (std::string_view(algo) == "gmm") {
        pred = gmm_predict(gmm_fit(points, clusters, o.seed), points);
      } else {
        FitConfig cfg;
        cfg.seed = o.seed;
        pred = predict(fit(ds.data, clusters, cfg).responsibilities);
      }
      const double seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      const double ca = clustering_accuracy(ds.labels, pred);
      const double ari = adjusted_rand_index(ds.labels, pred);
      const double ami = adjusted_mutual_information(ds.labels, pred);
      metrics += fmt::format("{},{},{},{},{}\n", name, algo, ca, ari, ami);
      timings.push_back({{"dataset", name}, {"algorithm", algo}, {"seconds", seconds}});
      log->info("bench: {} {} ARI {:.3f} ({:.1f} s)", name, algo, ari, seconds);

      const fs::path svg = dir / fmt::format("{}_{}.svg", name, algo);
      write_text(svg, scatter_svg(to_raw(ds.data, &pred), fmt::format("{} / {}", name, algo)));
      m.outputs.push_back(svg.string());
    }
  }
  const fs::path csv = dir / "metrics.csv";
  write_text(csv, metrics);
  m.outputs.push_back(csv.string());
  m.extra["timings"] = timings;
  m.write(dir / "manifest.json");
  return kExitOk;
}

int cmd_plot(const Options& o, Manifest& m) {
  const RawMatrix raw = read_csv(o.input, o.labels);
  if (raw.rows == 0) throw InputError(o.input + ": no data rows");
  if (raw.cols != 2) {
    throw InputError(fmt::format("{}: expected 2 feature columns, found {}", o.input, raw.cols));
  }
  write_text(o.output, scatter_svg(raw));
  m.inputs = {o.input};
  m.outputs = {o.output};
  m.write(sidecar(o.output, ".manifest.json"));
  return kExitOk;
}

bool is_number(std::string_view s) {
  double v = 0.0;
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  return !s.empty() && res.ec == std::errc() && res.ptr == s.data() + s.size();
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

}  // namespace

std::vector<int> read_label_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path);
  std::map<std::string, int, std::less<>> ids;
  std::vector<int> labels;
  bool first = true;
  for (std::string line; std::getline(in, line);) {
    const std::string_view text = trim(line);
    if (text.empty()) continue;
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    for (;;) {
      const std::size_t comma = text.find(',', start);
      fields.push_back(trim(text.substr(start, comma == std::string_view::npos ? comma
                                                                               : comma - start)));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (first) {
      first = false;
      bool header = fields.back() == "label";
      for (std::size_t f = 0; f + 1 < fields.size(); ++f) header = header || !is_number(fields[f]);
      if (header) continue;
    }
    const auto [it, inserted] = ids.try_emplace(std::string(fields.back()),
                                                static_cast<int>(ids.size()));
    labels.push_back(it->second);
  }
  return labels;
}

std::string scatter_svg(const RawMatrix& points, std::string_view title) {
  constexpr double margin = 20.0;
  constexpr double side = 400.0;
  const double top = title.empty() ? margin : margin + 16.0;
  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" "
      "viewBox=\"0 0 {0} {1}\">\n"
      "<rect width=\"{0}\" height=\"{1}\" fill=\"white\"/>\n",
      side + 2 * margin, side + top + margin);
  if (!title.empty()) {
    svg += fmt::format(
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" "
        "text-anchor=\"middle\">{}</text>\n",
        margin + side / 2, margin + 6.0, title);
  }
  svg += fmt::format(
      "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n",
      margin, top, side, side);
  for (std::size_t r = 0; r < points.rows; ++r) {
    const int label = points.labels ? (*points.labels)[r] : 0;
    const char* color = kPalette[static_cast<std::size_t>(label) % kPalette.size()];
    svg += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"2.5\" fill=\"{}\"/>\n",
                       margin + side * points(r, 0), top + side * (1.0 - points(r, 1)), color);
  }
  svg += "</svg>\n";
  return svg;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Flexible bivariate beta mixture clustering", "betamix"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  auto* generate = app.add_subcommand("generate", "Write a synthetic labeled data set");
  generate->add_option("--dataset", o.dataset, "Data set name")
      ->required()
      ->check(CLI::IsMember(dataset_names()));
  generate->add_option("--n", o.n, "Number of points")->check(CLI::PositiveNumber);
  generate->add_option("--seed", o.seed, "Random seed");
  generate->add_option("--output", o.output, "Output CSV")->required();

  auto* fit_cmd = app.add_subcommand("fit", "Fit a mixture model to a CSV");
  fit_cmd->add_option("--input", o.input, "Input CSV")->required();
  fit_cmd->add_option("--clusters", o.clusters, "Number of clusters")->required();
  fit_cmd->add_option("--seed", o.seed, "Random seed");
  fit_cmd->add_option("--epochs", o.epochs, "Maximum EM epochs");
  fit_cmd->add_option("--tol", o.tol, "Convergence tolerance on the log-likelihood");
  fit_cmd->add_option("--restarts", o.restarts, "Number of seeded restarts");
  fit_cmd->add_flag("--pca", o.pca, "Reduce the features to two dimensions with PCA");
  fit_cmd->add_flag("--labels", o.labels, "Last column holds labels (ignored)");
  fit_cmd->add_option("--output", o.output, "Output model document")->required();

  auto* predict_cmd = app.add_subcommand("predict", "Assign points to clusters");
  predict_cmd->add_option("--model", o.model, "Model document")->required();
  predict_cmd->add_option("--input", o.input, "Input CSV")->required();
  predict_cmd->add_flag("--pca", o.pca, "Reduce the features to two dimensions with PCA");
  predict_cmd->add_flag("--labels", o.labels, "Last column holds labels (ignored)");
  predict_cmd->add_flag("--raw", o.raw, "Input is already normalized; use it as is");
  predict_cmd->add_option("--output", o.output, "Output labeled CSV")->required();

  auto* sample_cmd = app.add_subcommand("sample", "Draw points from a model");
  sample_cmd->add_option("--model", o.model, "Model document")->required();
  sample_cmd->add_option("--n", o.n, "Number of points")->check(CLI::PositiveNumber);
  sample_cmd->add_option("--seed", o.seed, "Random seed");
  sample_cmd->add_option("--output", o.output, "Output labeled CSV")->required();

  auto* eval_cmd = app.add_subcommand("eval", "Compare two labelings (CA, ARI, AMI)");
  eval_cmd->add_option("--truth", o.truth, "Reference labels")->required();
  eval_cmd->add_option("--pred", o.pred, "Predicted labels")->required();
  eval_cmd->add_option("--output", o.output, "Optional metrics CSV");

  auto* bench_cmd = app.add_subcommand("bench", "k-means, GMM and FBBMM on all data sets");
  bench_cmd->add_option("--output", o.output, "Output directory")->required();
  bench_cmd->add_option("--seed", o.seed, "Random seed");
  bench_cmd->add_option("--n", o.n, "Points per data set")->check(CLI::Range(3, 1000000));

  auto* plot_cmd = app.add_subcommand("plot", "Scatter plot of a two-column CSV");
  plot_cmd->add_option("--input", o.input, "Input CSV")->required();
  plot_cmd->add_flag("--labels", o.labels, "Last column holds labels (colors)");
  plot_cmd->add_option("--output", o.output, "Output SVG")->required();

  std::vector<const char*> argv{"betamix"};
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    const auto subs = app.get_subcommands();
    out << (subs.empty() ? app.help() : subs.front()->help());
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    const auto subs = app.get_subcommands();
    err << "error: " << e.what() << "\n\n" << (subs.empty() ? app.help() : subs.front()->help());
    return kExitUsage;
  }

  CLI::App* sub = app.get_subcommands().front();
  Manifest manifest;
  manifest.command = sub->get_name();
  manifest.flags = resolved_flags(*sub);
  manifest.seed = o.seed;
  try {
    const std::string& name = manifest.command;
    if (name == "generate") return cmd_generate(o, manifest);
    if (name == "fit") return cmd_fit(o, manifest);
    if (name == "predict") return cmd_predict(o, manifest);
    if (name == "sample") return cmd_sample(o, manifest);
    if (name == "eval") return cmd_eval(o, manifest, out);
    if (name == "bench") return cmd_bench(o, manifest);
    return cmd_plot(o, manifest);
  } catch (const QuadratureError& e) {
    err << "error: " << e.what() << "\n";
    return kExitNonConvergence;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}

}  // namespace betamix::cli
