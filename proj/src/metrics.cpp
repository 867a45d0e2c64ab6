#include "betamix/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace betamix {

namespace {

std::vector<std::size_t> canonical(std::span<const int> labels, std::size_t& distinct) {
  std::map<int, std::size_t> index;
  for (int v : labels) {
    if (v < 0) throw std::invalid_argument("labels must be non-negative");
    index.emplace(v, 0);
  }
  std::size_t next = 0;
  for (auto& [value, idx] : index) idx = next++;
  distinct = next;
  std::vector<std::size_t> out(labels.size());
  for (std::size_t n = 0; n < labels.size(); ++n) out[n] = index.at(labels[n]);
  return out;
}

double comb2(std::int64_t k) { return 0.5 * static_cast<double>(k) * static_cast<double>(k - 1); }

double entropy(const std::vector<std::int64_t>& sums, std::int64_t total) {
  double h = 0.0;
  const double n = static_cast<double>(total);
  for (std::int64_t s : sums) {
    if (s > 0) {
      const double p = static_cast<double>(s) / n;
      h -= p * std::log(p);
    }
  }
  return h;
}

}  // namespace

ContingencyTable contingency(std::span<const int> truth, std::span<const int> predicted) {
  if (truth.size() != predicted.size()) {
    throw std::invalid_argument("label vectors differ in length (" +
                                std::to_string(truth.size()) + " vs " +
                                std::to_string(predicted.size()) + ")");
  }
  if (truth.empty()) throw std::invalid_argument("label vectors are empty");
  ContingencyTable t;
  const auto rows = canonical(truth, t.rows);
  const auto cols = canonical(predicted, t.cols);
  t.counts.assign(t.rows * t.cols, 0);
  t.row_sums.assign(t.rows, 0);
  t.col_sums.assign(t.cols, 0);
  for (std::size_t n = 0; n < rows.size(); ++n) {
    ++t.counts[rows[n] * t.cols + cols[n]];
    ++t.row_sums[rows[n]];
    ++t.col_sums[cols[n]];
  }
  t.total = static_cast<std::int64_t>(truth.size());
  return t;
}

std::vector<std::size_t> max_weight_assignment(const std::vector<std::vector<double>>& weights) {
  const std::size_t n = weights.size();
  if (n == 0) return {};
  double top = 0.0;
  for (const auto& row : weights) {
    if (row.size() != n) throw std::invalid_argument("assignment: matrix must be square");
    for (double w : row) top = std::max(top, w);
  }
  // Minimum-cost assignment on top - w with potentials; 1-based internally.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0);
  std::vector<double> v(n + 1, 0.0);
  std::vector<std::size_t> match(n + 1, 0);  // match[col] = row
  std::vector<std::size_t> way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    match[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = match[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = (top - weights[i0 - 1][j - 1]) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> assignment(n, 0);
  for (std::size_t j = 1; j <= n; ++j) assignment[match[j] - 1] = j - 1;
  return assignment;
}

double clustering_accuracy(std::span<const int> truth, std::span<const int> predicted) {
  const ContingencyTable t = contingency(truth, predicted);
  // Zero-padded to square: surplus clusters match nothing.
  const std::size_t k = std::max(t.rows, t.cols);
  std::vector<std::vector<double>> w(k, std::vector<double>(k, 0.0));
  for (std::size_t i = 0; i < t.rows; ++i) {
    for (std::size_t j = 0; j < t.cols; ++j) w[i][j] = static_cast<double>(t(i, j));
  }
  const auto assignment = max_weight_assignment(w);
  std::int64_t matched = 0;
  for (std::size_t i = 0; i < k; ++i) matched += static_cast<std::int64_t>(w[i][assignment[i]]);
  return static_cast<double>(matched) / static_cast<double>(t.total);
}

double adjusted_rand_index(std::span<const int> truth, std::span<const int> predicted) {
  const ContingencyTable t = contingency(truth, predicted);
  if (t.total < 2) throw std::invalid_argument("adjusted_rand_index: need at least 2 items");
  double index = 0.0;
  for (std::int64_t c : t.counts) index += comb2(c);
  double sum_a = 0.0;
  for (std::int64_t a : t.row_sums) sum_a += comb2(a);
  double sum_b = 0.0;
  for (std::int64_t b : t.col_sums) sum_b += comb2(b);
  const double expected = sum_a * sum_b / comb2(t.total);
  const double max_index = 0.5 * (sum_a + sum_b);
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

double mutual_information(const ContingencyTable& t) {
  const double n = static_cast<double>(t.total);
  double mi = 0.0;
  for (std::size_t i = 0; i < t.rows; ++i) {
    for (std::size_t j = 0; j < t.cols; ++j) {
      const std::int64_t c = t(i, j);
      if (c == 0) continue;
      const double nij = static_cast<double>(c);
      mi += nij / n *
            (std::log(nij) + std::log(n) - std::log(static_cast<double>(t.row_sums[i])) -
             std::log(static_cast<double>(t.col_sums[j])));
    }
  }
  return std::max(0.0, mi);
}

double expected_mutual_information(const ContingencyTable& t) {
  const std::int64_t total = t.total;
  const double n = static_cast<double>(total);
  std::vector<double> log_fact(static_cast<std::size_t>(total) + 1);
  for (std::int64_t k = 0; k <= total; ++k) {
    log_fact[k] = std::lgamma(static_cast<double>(k) + 1.0);
  }
  double emi = 0.0;
  for (std::int64_t a : t.row_sums) {
    for (std::int64_t b : t.col_sums) {
      const std::int64_t lo = std::max<std::int64_t>(1, a + b - total);
      const std::int64_t hi = std::min(a, b);
      const double fixed = log_fact[a] + log_fact[b] + log_fact[total - a] +
                           log_fact[total - b] - log_fact[total];
      for (std::int64_t nij = lo; nij <= hi; ++nij) {
        const double log_p = fixed - log_fact[nij] - log_fact[a - nij] - log_fact[b - nij] -
                             log_fact[total - a - b + nij];
        const double x = static_cast<double>(nij);
        const double term = x / n *
                            (std::log(n) + std::log(x) - std::log(static_cast<double>(a)) -
                             std::log(static_cast<double>(b)));
        emi += term * std::exp(log_p);
      }
    }
  }
  return emi;
}

double adjusted_mutual_information(std::span<const int> truth, std::span<const int> predicted) {
  const ContingencyTable t = contingency(truth, predicted);
  if (t.rows == 1 && t.cols == 1) return 1.0;
  const double mi = mutual_information(t);
  const double emi = expected_mutual_information(t);
  const double normalizer = 0.5 * (entropy(t.row_sums, t.total) + entropy(t.col_sums, t.total));
  const double denominator = normalizer - emi;
  constexpr double eps = std::numeric_limits<double>::epsilon();
  if (std::fabs(denominator) < eps) {
    return std::fabs(mi - emi) < eps ? 1.0 : 0.0;
  }
  // MI cannot exceed the mean entropy; trim rounding overshoot
  return std::min(1.0, (mi - emi) / denominator);
}

}  // namespace betamix
