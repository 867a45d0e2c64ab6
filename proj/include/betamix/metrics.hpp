#pragma once

// External clustering metrics: permutation-matched accuracy, adjusted Rand
// index and adjusted mutual information (arithmetic-mean normalization, nats).

#include <cstdint>
#include <span>
#include <vector>

namespace betamix {

/// Cross-tabulation of two labelings. Label values are mapped to contiguous
/// indices in increasing order of value.
struct ContingencyTable {
  std::size_t rows = 0;  // distinct true labels
  std::size_t cols = 0;  // distinct predicted labels
  std::vector<std::int64_t> counts;  // rows x cols, row-major
  std::vector<std::int64_t> row_sums;
  std::vector<std::int64_t> col_sums;
  std::int64_t total = 0;

  std::int64_t operator()(std::size_t i, std::size_t j) const { return counts[i * cols + j]; }
};

/// Throws std::invalid_argument on length mismatch, empty input or negative labels.
ContingencyTable contingency(std::span<const int> truth, std::span<const int> predicted);

/// Best agreement rate over all one-to-one relabelings of `predicted`.
double clustering_accuracy(std::span<const int> truth, std::span<const int> predicted);

double adjusted_rand_index(std::span<const int> truth, std::span<const int> predicted);

double mutual_information(const ContingencyTable& table);

/// Expected mutual information under the permutation (hypergeometric) model.
double expected_mutual_information(const ContingencyTable& table);

double adjusted_mutual_information(std::span<const int> truth, std::span<const int> predicted);

/// Maximum-weight perfect matching on a square matrix (Hungarian method).
/// Returns assignment[row] = column.
std::vector<std::size_t> max_weight_assignment(const std::vector<std::vector<double>>& weights);

}  // namespace betamix
