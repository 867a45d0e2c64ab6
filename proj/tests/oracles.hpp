#pragma once

// Slow reference implementations used to check the metrics and densities.

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <vector>

namespace oracle {

inline std::vector<int> relabel(const std::vector<int>& v) {
  std::map<int, int> ids;
  std::vector<int> out;
  for (int x : v) out.push_back(ids.try_emplace(x, static_cast<int>(ids.size())).first->second);
  return out;
}

// Best agreement over every injective relabeling of the predicted clusters.
inline double brute_force_accuracy(const std::vector<int>& truth, const std::vector<int>& pred) {
  const auto t = relabel(truth);
  const auto p = relabel(pred);
  const int kt = *std::max_element(t.begin(), t.end()) + 1;
  const int kp = *std::max_element(p.begin(), p.end()) + 1;
  const int k = std::max(kt, kp);
  std::vector<int> perm(k);
  std::iota(perm.begin(), perm.end(), 0);
  long best = 0;
  do {
    long hits = 0;
    for (std::size_t n = 0; n < t.size(); ++n) hits += perm[p[n]] == t[n];
    best = std::max(best, hits);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return static_cast<double>(best) / static_cast<double>(t.size());
}

// Adjusted Rand index by direct enumeration of all item pairs.
inline double pair_counting_ari(const std::vector<int>& truth, const std::vector<int>& pred) {
  const std::size_t n = truth.size();
  double both = 0, same_t = 0, same_p = 0, pairs = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool a = truth[i] == truth[j];
      const bool b = pred[i] == pred[j];
      both += a && b;
      same_t += a;
      same_p += b;
      pairs += 1;
    }
  }
  const double expected = same_t * same_p / pairs;
  const double top = 0.5 * (same_t + same_p);
  if (top == expected) return 1.0;
  return (both - expected) / (top - expected);
}

inline double mutual_info(const std::vector<int>& a, const std::vector<int>& b) {
  std::map<std::pair<int, int>, double> joint;
  std::map<int, double> ma, mb;
  const double n = static_cast<double>(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    joint[{a[i], b[i]}] += 1;
    ma[a[i]] += 1;
    mb[b[i]] += 1;
  }
  double mi = 0;
  for (const auto& [key, c] : joint) mi += c / n * std::log(n * c / (ma[key.first] * mb[key.second]));
  return mi;
}

inline double entropy(const std::vector<int>& a) {
  std::map<int, double> m;
  for (int x : a) m[x] += 1;
  double h = 0;
  for (const auto& [k, c] : m) h -= c / a.size() * std::log(c / a.size());
  return h;
}

// E[MI] as the average over all n! orderings of the predicted labels.
inline double permutation_emi(const std::vector<int>& truth, std::vector<int> pred) {
  std::vector<int> idx(pred.size());
  std::iota(idx.begin(), idx.end(), 0);
  double total = 0;
  long count = 0;
  do {
    std::vector<int> shuffled(pred.size());
    for (std::size_t i = 0; i < idx.size(); ++i) shuffled[i] = pred[idx[i]];
    total += mutual_info(truth, shuffled);
    ++count;
  } while (std::next_permutation(idx.begin(), idx.end()));
  return total / static_cast<double>(count);
}

// AMI with arithmetic-mean normalization on top of the permutation E[MI].
inline double permutation_ami(const std::vector<int>& truth, const std::vector<int>& pred) {
  const double emi = permutation_emi(truth, pred);
  const double mi = mutual_info(truth, pred);
  return (mi - emi) / (0.5 * (entropy(truth) + entropy(pred)) - emi);
}

}  // namespace oracle
