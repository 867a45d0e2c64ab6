#include "betamix/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace betamix {

namespace {

struct Blob {
  double cx;
  double cy;
  double sd;
};

RawMatrix gaussian_blobs(std::size_t n, const std::vector<Blob>& blobs, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("generator: n must be at least 2");
  Rng rng(seed);
  const auto sizes = split_sizes(n, blobs.size());
  RawMatrix raw;
  raw.rows = n;
  raw.cols = 2;
  raw.labels.emplace();
  raw.values.reserve(2 * n);
  for (std::size_t k = 0; k < blobs.size(); ++k) {
    for (std::size_t i = 0; i < sizes[k]; ++i) {
      raw.values.push_back(blobs[k].cx + blobs[k].sd * rng.normal());
      raw.values.push_back(blobs[k].cy + blobs[k].sd * rng.normal());
      raw.labels->push_back(static_cast<int>(k));
    }
  }
  return raw;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(trim(line.substr(start, comma == std::string_view::npos ? comma : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

bool parse_double(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return false;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size() && std::isfinite(out);
}

bool parse_label(std::string_view s, int& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return false;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size() && out >= 0;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

}  // namespace

void RawMatrix::validate() const {
  if (rows < 2) throw std::invalid_argument("matrix needs at least 2 rows");
  if (cols < 1) throw std::invalid_argument("matrix needs at least 1 column");
  if (values.size() != rows * cols) throw std::invalid_argument("matrix is not rectangular");
  if (labels) {
    if (labels->size() != rows) throw std::invalid_argument("label count differs from row count");
    for (int l : *labels) {
      if (l < 0) throw std::invalid_argument("labels must be non-negative");
    }
  }
}

RawMatrix normalize(const RawMatrix& raw) {
  raw.validate();
  RawMatrix out = raw;
  for (std::size_t c = 0; c < raw.cols; ++c) {
    double lo = raw(0, c);
    double hi = raw(0, c);
    for (std::size_t r = 1; r < raw.rows; ++r) {
      lo = std::min(lo, raw(r, c));
      hi = std::max(hi, raw(r, c));
    }
    if (!(hi > lo)) {
      throw std::invalid_argument("normalize: column " + std::to_string(c) +
                                  " is constant (max == min)");
    }
    const double span = hi - lo;
    for (std::size_t r = 0; r < raw.rows; ++r) {
      const double x = raw(r, c);
      double v;
      if (x == hi) {
        v = kFeatureHigh;
      } else {
        v = kFeatureLow + (kFeatureHigh - kFeatureLow) * ((x - lo) / span);
      }
      out(r, c) = std::clamp(v, kFeatureLow, kFeatureHigh);
    }
  }
  return out;
}

DataMatrix to_data_matrix(const RawMatrix& raw) {
  if (raw.cols != 2) {
    throw std::invalid_argument("expected 2 feature columns, found " + std::to_string(raw.cols));
  }
  std::vector<Point2> points;
  points.reserve(raw.rows);
  for (std::size_t r = 0; r < raw.rows; ++r) points.emplace_back(raw(r, 0), raw(r, 1));
  return DataMatrix(std::move(points));
}

RawMatrix to_raw(const DataMatrix& data, const std::vector<int>* labels) {
  RawMatrix raw;
  raw.rows = data.size();
  raw.cols = 2;
  raw.values.reserve(2 * data.size());
  for (const Point2& p : data.points()) {
    raw.values.push_back(p.x());
    raw.values.push_back(p.y());
  }
  if (labels) raw.labels = *labels;
  return raw;
}

LabeledDataset to_labeled(const RawMatrix& raw) {
  const RawMatrix norm = normalize(raw);
  return {to_data_matrix(norm), norm.labels.value_or(std::vector<int>(norm.rows, 0))};
}

std::vector<std::size_t> split_sizes(std::size_t n, std::size_t k) {
  std::vector<std::size_t> sizes(k, n / k);
  for (std::size_t i = 0; i < n % k; ++i) ++sizes[i];
  return sizes;
}

RawMatrix circles_raw(std::size_t n, double noise_sd, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("generator: n must be at least 2");
  if (!(noise_sd >= 0.0)) throw std::invalid_argument("circles: noise_sd must be >= 0");
  Rng rng(seed);
  const auto sizes = split_sizes(n, 2);
  const double radius[2] = {1.0, 0.45};
  RawMatrix raw;
  raw.rows = n;
  raw.cols = 2;
  raw.labels.emplace();
  for (std::size_t k = 0; k < 2; ++k) {
    for (std::size_t i = 0; i < sizes[k]; ++i) {
      const double angle = 2.0 * std::numbers::pi * rng.uniform();
      const double nx = noise_sd * rng.normal();
      const double ny = noise_sd * rng.normal();
      raw.values.push_back(radius[k] * std::cos(angle) + nx);
      raw.values.push_back(radius[k] * std::sin(angle) + ny);
      raw.labels->push_back(static_cast<int>(k));
    }
  }
  return raw;
}

RawMatrix varied_blobs_raw(std::size_t n, std::uint64_t seed) {
  return gaussian_blobs(n, {{-6.0, 0.0, 0.8}, {6.0, 0.0, 0.8}, {0.0, 0.0, 2.5}}, seed);
}

RawMatrix aniso_raw(std::size_t n, int correlation_sign, std::uint64_t seed) {
  if (correlation_sign != 1 && correlation_sign != -1) {
    throw std::invalid_argument("aniso: correlation sign must be +1 or -1");
  }
  // Centers flip with the sign so the two variants are mirror images.
  const double s = correlation_sign;
  RawMatrix raw = gaussian_blobs(
      n, {{-2.0, 2.5 * s, 0.5}, {0.0, -1.0 * s, 0.5}, {2.0, -4.5 * s, 0.5}}, seed);
  const double shear = 1.5 * s;
  for (std::size_t r = 0; r < raw.rows; ++r) {
    const double x = raw(r, 0);
    const double y = raw(r, 1);
    raw(r, 1) = shear * x + 0.5 * y;
  }
  return raw;
}

RawMatrix blobs_raw(std::size_t n, std::uint64_t seed) {
  return gaussian_blobs(n, {{-8.0, -4.0, 0.6}, {0.0, 8.0, 0.6}, {8.0, -4.0, 0.6}}, seed);
}

LabeledDataset gen_circles(std::size_t n, double noise_sd, std::uint64_t seed) {
  return to_labeled(circles_raw(n, noise_sd, seed));
}

LabeledDataset gen_varied_blobs(std::size_t n, std::uint64_t seed) {
  return to_labeled(varied_blobs_raw(n, seed));
}

LabeledDataset gen_aniso(std::size_t n, int correlation_sign, std::uint64_t seed) {
  return to_labeled(aniso_raw(n, correlation_sign, seed));
}

LabeledDataset gen_blobs(std::size_t n, std::uint64_t seed) {
  return to_labeled(blobs_raw(n, seed));
}

const std::vector<std::string>& dataset_names() {
  static const std::vector<std::string> names = {"circles", "varied", "aniso-neg", "aniso-pos",
                                                 "blobs"};
  return names;
}

LabeledDataset make_dataset(std::string_view name, std::size_t n, std::uint64_t seed) {
  if (name == "circles") return gen_circles(n, kCirclesNoise, seed);
  if (name == "varied") return gen_varied_blobs(n, seed);
  if (name == "aniso-neg") return gen_aniso(n, -1, seed);
  if (name == "aniso-pos") return gen_aniso(n, 1, seed);
  if (name == "blobs") return gen_blobs(n, seed);
  throw std::invalid_argument("unknown dataset '" + std::string(name) + "'");
}

RawMatrix parse_csv(std::string_view text, bool has_labels) {
  RawMatrix raw;
  std::size_t expected_fields = 0;
  std::size_t line_no = 0;
  bool first_content = true;
  if (has_labels) raw.labels.emplace();
  while (!text.empty()) {
    const std::size_t nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    ++line_no;
    if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) line.remove_prefix(3);
    if (trim(line).empty()) continue;

    const auto fields = split_fields(line);
    if (first_content) {
      first_content = false;
      double probe = 0.0;
      const bool header = std::any_of(fields.begin(), fields.end(), [&](std::string_view f) {
        return !parse_double(f, probe);
      });
      expected_fields = fields.size();
      if (has_labels && expected_fields < 2) {
        throw CsvError("line " + std::to_string(line_no) +
                       ": need at least one feature column and a label column");
      }
      if (header) continue;
    }
    if (fields.size() != expected_fields) {
      throw CsvError("line " + std::to_string(line_no) + ": expected " +
                     std::to_string(expected_fields) + " fields, found " +
                     std::to_string(fields.size()));
    }
    const std::size_t features = has_labels ? expected_fields - 1 : expected_fields;
    for (std::size_t f = 0; f < features; ++f) {
      double v = 0.0;
      if (!parse_double(fields[f], v)) {
        throw CsvError("line " + std::to_string(line_no) + ", field " + std::to_string(f + 1) +
                       ": '" + std::string(fields[f]) + "' is not a number");
      }
      raw.values.push_back(v);
    }
    if (has_labels) {
      int label = 0;
      if (!parse_label(fields.back(), label)) {
        throw CsvError("line " + std::to_string(line_no) + ": label '" +
                       std::string(fields.back()) + "' is not a non-negative integer");
      }
      raw.labels->push_back(label);
    }
    raw.cols = features;
    ++raw.rows;
  }
  return raw;
}

RawMatrix read_csv(const std::filesystem::path& path, bool has_labels) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CsvError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), has_labels);
}

std::string format_csv(const RawMatrix& raw) {
  std::string out;
  if (raw.cols == 2) {
    out += "x,y";
  } else {
    for (std::size_t c = 0; c < raw.cols; ++c) {
      if (c > 0) out += ',';
      out += "f" + std::to_string(c + 1);
    }
  }
  if (raw.labels) out += ",label";
  out += '\n';
  for (std::size_t r = 0; r < raw.rows; ++r) {
    for (std::size_t c = 0; c < raw.cols; ++c) {
      if (c > 0) out += ',';
      out += format_double(raw(r, c));
    }
    if (raw.labels) out += "," + std::to_string((*raw.labels)[r]);
    out += '\n';
  }
  return out;
}

void write_csv(const std::filesystem::path& path, const RawMatrix& raw) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CsvError("cannot write " + path.string());
  out << format_csv(raw);
}

void write_csv(const std::filesystem::path& path, const LabeledDataset& dataset) {
  write_csv(path, to_raw(dataset.data, &dataset.labels));
}

Eigen symmetric_eigen(std::vector<std::vector<double>> a) {
  const std::size_t m = a.size();
  std::vector<std::vector<double>> v(m, std::vector<double>(m, 0.0));
  for (std::size_t i = 0; i < m; ++i) v[i][i] = 1.0;

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    double diag = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      diag += a[i][i] * a[i][i];
      for (std::size_t j = i + 1; j < m; ++j) off += a[i][j] * a[i][j];
    }
    if (off <= 1e-30 * diag || off == 0.0) break;
    for (std::size_t p = 0; p < m; ++p) {
      for (std::size_t q = p + 1; q < m; ++q) {
        if (a[p][q] == 0.0) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < m; ++k) {
          const double akp = a[k][p];
          const double akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < m; ++k) {
          const double apk = a[p][k];
          const double aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < m; ++k) {
          const double vkp = v[k][p];
          const double vkq = v[k][q];
          v[k][p] = c * vkp - s * vkq;
          v[k][q] = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<std::size_t> order(m);
  for (std::size_t i = 0; i < m; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return a[i][i] > a[j][j]; });
  Eigen out;
  for (std::size_t k : order) {
    out.values.push_back(a[k][k]);
    std::vector<double> vec(m);
    for (std::size_t i = 0; i < m; ++i) vec[i] = v[i][k];
    out.vectors.push_back(std::move(vec));
  }
  return out;
}

PcaResult pca(const RawMatrix& raw) {
  raw.validate();
  if (raw.cols < 2) throw std::invalid_argument("pca: need at least 2 columns");
  if (raw.rows < 3) throw std::invalid_argument("pca: need at least 3 rows");
  const std::size_t m = raw.cols;
  PcaResult out;
  out.mean.assign(m, 0.0);
  for (std::size_t r = 0; r < raw.rows; ++r) {
    for (std::size_t c = 0; c < m; ++c) out.mean[c] += raw(r, c);
  }
  for (double& v : out.mean) v /= static_cast<double>(raw.rows);

  std::vector<std::vector<double>> cov(m, std::vector<double>(m, 0.0));
  for (std::size_t r = 0; r < raw.rows; ++r) {
    for (std::size_t i = 0; i < m; ++i) {
      const double di = raw(r, i) - out.mean[i];
      for (std::size_t j = i; j < m; ++j) cov[i][j] += di * (raw(r, j) - out.mean[j]);
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i; j < m; ++j) {
      cov[i][j] /= static_cast<double>(raw.rows - 1);
      cov[j][i] = cov[i][j];
    }
  }
  const Eigen eig = symmetric_eigen(cov);
  out.eigenvalues = eig.values;
  const double scale = std::max(std::fabs(eig.values.front()), std::numeric_limits<double>::min());
  std::size_t positive = 0;
  for (double v : eig.values) {
    if (v > 1e-12 * scale) ++positive;
  }
  if (positive < 2) {
    throw std::invalid_argument("pca: covariance has fewer than 2 positive eigenvalues");
  }
  for (std::size_t k = 0; k < 2; ++k) {
    std::vector<double> vec = eig.vectors[k];
    std::size_t big = 0;
    for (std::size_t i = 1; i < m; ++i) {
      if (std::fabs(vec[i]) > std::fabs(vec[big])) big = i;
    }
    if (vec[big] < 0.0) {
      for (double& x : vec) x = -x;
    }
    out.components.push_back(std::move(vec));
  }
  out.scores.rows = raw.rows;
  out.scores.cols = 2;
  out.scores.values.resize(2 * raw.rows);
  for (std::size_t r = 0; r < raw.rows; ++r) {
    for (std::size_t k = 0; k < 2; ++k) {
      double s = 0.0;
      for (std::size_t i = 0; i < m; ++i) s += (raw(r, i) - out.mean[i]) * out.components[k][i];
      out.scores(r, k) = s;
    }
  }
  out.scores.labels = raw.labels;
  return out;
}

RawMatrix pca_2d(const RawMatrix& raw) { return normalize(pca(raw).scores); }

}  // namespace betamix
