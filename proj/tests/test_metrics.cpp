#include <gtest/gtest.h>

#include <vector>

#include "betamix/metrics.hpp"
#include "betamix/rng.hpp"
#include "oracles.hpp"

using namespace betamix;

namespace {

std::vector<int> random_labels(Rng& rng, std::size_t n, std::size_t k) {
  std::vector<int> v(n);
  for (int& x : v) x = static_cast<int>(rng.index(k));
  return v;
}

}  // namespace

TEST(Accuracy, WorkedExampleIsPerfect) {
  const std::vector<int> truth{0, 0, 1, 1};
  const std::vector<int> pred{1, 1, 0, 0};
  EXPECT_DOUBLE_EQ(clustering_accuracy(truth, pred), 1.0);
}

TEST(Accuracy, MatchesBruteForce) {
  Rng rng(1);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = 1 + rng.index(12);
    const auto t = random_labels(rng, n, 1 + rng.index(6));
    const auto p = random_labels(rng, n, 1 + rng.index(6));
    EXPECT_EQ(clustering_accuracy(t, p), oracle::brute_force_accuracy(t, p));
  }
}

TEST(Accuracy, MoreClustersThanClasses) {
  const std::vector<int> truth{0, 0, 0, 0};
  const std::vector<int> pred{0, 1, 2, 3};
  EXPECT_DOUBLE_EQ(clustering_accuracy(truth, pred), 0.25);
}

TEST(Contingency, RejectsBadInput) {
  const std::vector<int> a{0, 1};
  const std::vector<int> b{0};
  const std::vector<int> neg{0, -1};
  EXPECT_THROW(contingency(a, b), std::invalid_argument);
  EXPECT_THROW(contingency(std::vector<int>{}, std::vector<int>{}), std::invalid_argument);
  EXPECT_THROW(contingency(a, neg), std::invalid_argument);
}

TEST(Contingency, SparseLabelsAreCompacted) {
  const std::vector<int> a{7, 7, 3};
  const std::vector<int> b{0, 5, 5};
  const ContingencyTable t = contingency(a, b);
  EXPECT_EQ(t.rows, 2u);
  EXPECT_EQ(t.cols, 2u);
  EXPECT_EQ(t(1, 0), 1);  // label 7, label 0
  EXPECT_EQ(t.total, 3);
}

TEST(Assignment, SmallKnownCase) {
  const std::vector<std::vector<double>> w{{1, 5, 0}, {4, 1, 0}, {0, 0, 2}};
  EXPECT_EQ(max_weight_assignment(w), (std::vector<std::size_t>{1, 0, 2}));
}

TEST(Ari, MatchesPairCounting) {
  Rng rng(2);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = 2 + rng.index(49);
    const auto t = random_labels(rng, n, 1 + rng.index(5));
    const auto p = random_labels(rng, n, 1 + rng.index(5));
    EXPECT_NEAR(adjusted_rand_index(t, p), oracle::pair_counting_ari(t, p), 1e-12);
  }
}

TEST(Ari, IdentityAndPermutation) {
  const std::vector<int> t{0, 0, 1, 1, 2, 2};
  const std::vector<int> p{2, 2, 0, 0, 1, 1};
  EXPECT_DOUBLE_EQ(adjusted_rand_index(t, p), 1.0);
  EXPECT_THROW(adjusted_rand_index(std::vector<int>{0}, std::vector<int>{0}),
               std::invalid_argument);
}

TEST(Ami, MatchesPermutationOracle) {
  Rng rng(3);
  int checked = 0;
  while (checked < 40) {
    const std::size_t n = 3 + rng.index(6);
    const auto t = random_labels(rng, n, 2 + rng.index(2));
    const auto p = random_labels(rng, n, 2 + rng.index(2));
    if (oracle::entropy(t) == 0 || oracle::entropy(p) == 0) continue;
    EXPECT_NEAR(expected_mutual_information(contingency(t, p)), oracle::permutation_emi(t, p),
                1e-9);
    EXPECT_NEAR(adjusted_mutual_information(t, p), oracle::permutation_ami(t, p), 1e-9);
    ++checked;
  }
}

TEST(Ami, DegenerateCases) {
  const std::vector<int> single{0, 0, 0, 0};
  const std::vector<int> split{0, 0, 1, 1};
  EXPECT_DOUBLE_EQ(adjusted_mutual_information(single, single), 1.0);
  EXPECT_DOUBLE_EQ(adjusted_mutual_information(split, split), 1.0);
  EXPECT_NEAR(adjusted_mutual_information(single, split), 0.0, 1e-12);
}

// Reference values computed once with scikit-learn 1.7.2.
TEST(FrozenValues, AgreeWithReferenceLibrary) {
  struct Case {
    std::vector<int> t, p;
    double ari, ami;
  };
  const std::vector<Case> cases{
      {{0, 0, 0, 1, 1, 1, 2, 2, 2, 2}, {0, 0, 1, 1, 1, 2, 2, 2, 0, 0}, 0.09090909090909091,
       0.17152423540072848},
      {{0, 1, 2, 0, 1, 2, 0, 1}, {1, 1, 0, 0, 2, 2, 1, 0}, -0.14285714285714285,
       -0.17423307073191513},
      {{0, 0, 1, 1, 2, 2, 3, 3, 3, 0, 1, 2}, {0, 0, 0, 1, 1, 1, 2, 2, 2, 3, 3, 3},
       0.28703703703703703, 0.303923962889736},
      {{0, 0, 0, 0, 0, 1}, {0, 1, 1, 1, 1, 1}, -0.2, -0.19999999999999904},
  };
  for (const Case& c : cases) {
    EXPECT_NEAR(adjusted_rand_index(c.t, c.p), c.ari, 1e-12);
    EXPECT_NEAR(adjusted_mutual_information(c.t, c.p), c.ami, 1e-9);
  }
}
