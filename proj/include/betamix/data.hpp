#pragma once

// Data sets: synthetic benchmark generators, CSV input/output, feature
// normalization onto [0.01, 0.99] and PCA reduction to two dimensions.

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "betamix/emfit.hpp"

namespace betamix {

inline constexpr double kFeatureLow = 0.01;
inline constexpr double kFeatureHigh = 0.99;

/// Row-major N x m matrix of reals with an optional label per row.
struct RawMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;
  std::optional<std::vector<int>> labels;

  double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  double& operator()(std::size_t r, std::size_t c) { return values[r * cols + c]; }

  /// Rectangular, N >= 2, m >= 1, labels (if any) one per row and non-negative.
  void validate() const;
};

struct LabeledDataset {
  DataMatrix data;
  std::vector<int> labels;
};

/// Thrown for malformed CSV input; the message names the offending line.
class CsvError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Per column: x -> 0.01 + (x - min)(0.99 - 0.01)/(max - min).
/// Throws std::invalid_argument naming the first constant column.
RawMatrix normalize(const RawMatrix& raw);

/// Two-column matrix to points; values must lie inside (0, 1).
DataMatrix to_data_matrix(const RawMatrix& raw);

RawMatrix to_raw(const DataMatrix& data, const std::vector<int>* labels = nullptr);

/// Normalizes and converts; labels are carried over when present.
LabeledDataset to_labeled(const RawMatrix& raw);

/// Cluster sizes for n points in k groups: n / k each, the remainder going
/// one apiece to the first groups.
std::vector<std::size_t> split_sizes(std::size_t n, std::size_t k);

// Generators. The *_raw variants return the data before normalization.
RawMatrix circles_raw(std::size_t n, double noise_sd, std::uint64_t seed);
RawMatrix varied_blobs_raw(std::size_t n, std::uint64_t seed);
RawMatrix aniso_raw(std::size_t n, int correlation_sign, std::uint64_t seed);
RawMatrix blobs_raw(std::size_t n, std::uint64_t seed);

inline constexpr double kCirclesNoise = 0.05;

/// Two concentric noisy circles, radii 1.0 (label 0) and 0.45 (label 1).
LabeledDataset gen_circles(std::size_t n, double noise_sd, std::uint64_t seed);
/// Gaussians at (-6, 0), (6, 0), (0, 0) with sd 0.8, 0.8, 2.5.
LabeledDataset gen_varied_blobs(std::size_t n, std::uint64_t seed);
/// Three sheared isotropic Gaussians with strongly signed correlation.
LabeledDataset gen_aniso(std::size_t n, int correlation_sign, std::uint64_t seed);
/// Three well-separated isotropic Gaussians (sd 0.6).
LabeledDataset gen_blobs(std::size_t n, std::uint64_t seed);

/// Names accepted by make_dataset.
const std::vector<std::string>& dataset_names();

/// One of circles, varied, aniso-neg, aniso-pos, blobs.
LabeledDataset make_dataset(std::string_view name, std::size_t n, std::uint64_t seed);

/// Parses CSV text. A first row containing a non-numeric field is a header.
/// With `has_labels`, the last column holds non-negative integer labels.
RawMatrix parse_csv(std::string_view text, bool has_labels);
RawMatrix read_csv(const std::filesystem::path& path, bool has_labels);

/// CSV text with a header line, 17 significant digits, LF line endings.
std::string format_csv(const RawMatrix& raw);
void write_csv(const std::filesystem::path& path, const RawMatrix& raw);
void write_csv(const std::filesystem::path& path, const LabeledDataset& dataset);

struct Eigen {
  std::vector<double> values;                // descending
  std::vector<std::vector<double>> vectors;  // vectors[k] pairs with values[k]
};

/// Cyclic Jacobi eigen-decomposition of a symmetric matrix.
Eigen symmetric_eigen(std::vector<std::vector<double>> matrix);

struct PcaResult {
  std::vector<double> mean;
  std::vector<double> eigenvalues;              // all, descending
  std::vector<std::vector<double>> components;  // leading two, unit length
  RawMatrix scores;                             // N x 2 projections
};

/// Leading two principal axes; each axis is signed so that its
/// largest-magnitude entry is positive. Throws std::invalid_argument when
/// fewer than two eigenvalues are positive.
PcaResult pca(const RawMatrix& raw);

/// normalize(pca(raw).scores), labels carried over.
RawMatrix pca_2d(const RawMatrix& raw);

}  // namespace betamix
