#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "betamix/data.hpp"
#include "betamix/emfit.hpp"
#include "betamix/metrics.hpp"

using namespace betamix;

namespace {

const MixtureModel kRecovery({0.5, 0.5}, {BetaParams(8, 2, 2, 2), BetaParams(2, 2, 2, 8)});

Sample recovery_sample(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  return sample(kRecovery, n, rng);
}

FitConfig quick_config(std::uint64_t seed) {
  FitConfig cfg;
  cfg.seed = seed;
  cfg.restarts = 1;
  cfg.epochs = 40;
  return cfg;
}

}  // namespace

TEST(MixtureModel, Invariants) {
  EXPECT_THROW(MixtureModel({0.5, 0.4}, {BetaParams(1, 1, 1, 1), BetaParams(1, 1, 1, 1)}),
               std::invalid_argument);
  EXPECT_THROW(MixtureModel({1.0}, {BetaParams(1, 1, 1, 1), BetaParams(1, 1, 1, 1)}),
               std::invalid_argument);
  EXPECT_THROW(MixtureModel({}, {}), std::invalid_argument);
  EXPECT_NO_THROW(MixtureModel({1.0}, {BetaParams(1, 1, 1, 1)}));
}

TEST(EStep, RowsSumToOne) {
  const Sample s = recovery_sample(200, 1);
  const Responsibilities r = e_step(kRecovery, s.data);
  for (std::size_t n = 0; n < r.rows(); ++n) {
    EXPECT_NEAR(r(n, 0) + r(n, 1), 1.0, 1e-9);
  }
  EXPECT_TRUE(r.degenerate_rows().empty());
}

TEST(MStep, WeightsSumToOne) {
  const Sample s = recovery_sample(300, 2);
  const auto w = m_step_weights(e_step(kRecovery, s.data));
  EXPECT_NEAR(w[0] + w[1], 1.0, 1e-12);
}

TEST(MStep, EmptyClusterIsReseeded) {
  const Sample s = recovery_sample(100, 3);
  Responsibilities r(100, 2);
  for (std::size_t n = 0; n < 100; ++n) r(n, 0) = 1.0;
  const MixtureModel start({0.999, 0.001}, {BetaParams(3, 2, 2, 3), BetaParams(5, 5, 5, 5)});
  const MixtureModel m = m_step_components(start, s.data, r);
  EXPECT_NE(m.components()[1], start.components()[1]);
  EXPECT_NEAR(m.weights()[1], 0.01, 1e-12);
  EXPECT_NEAR(m.weights()[0] + m.weights()[1], 1.0, 1e-12);
}

TEST(MStep, ObjectiveDoesNotDecrease) {
  Rng rng(4);
  std::vector<Point2> pts;
  for (int i = 0; i < 400; ++i) pts.push_back(sample_one(BetaParams(2, 2, 2, 2), rng));
  const DataMatrix data(pts);
  Responsibilities r(pts.size(), 1);
  for (std::size_t n = 0; n < pts.size(); ++n) r(n, 0) = 1.0;
  const MixtureModel start({1.0}, {BetaParams(1, 3, 1, 1)});
  const MixtureModel m = m_step_components(start, data, r);
  EXPECT_GE(log_likelihood(m, data), log_likelihood(start, data));
}

TEST(MStep, SingleClusterRecoversMean) {
  Rng rng(5);
  std::vector<Point2> pts;
  for (int i = 0; i < 1000; ++i) pts.push_back(sample_one(BetaParams(4, 2, 2, 2), rng));
  const DataMatrix data(pts);
  Responsibilities r(pts.size(), 1);
  for (std::size_t n = 0; n < pts.size(); ++n) r(n, 0) = 1.0;
  const MixtureModel m =
      m_step_components(MixtureModel({1.0}, {BetaParams(2, 2, 2, 2)}), data, r);
  const Mean2 mu = mean(m.components()[0]);
  EXPECT_NEAR(mu.x, 0.6, 0.03);
  EXPECT_NEAR(mu.y, 0.6, 0.03);
}

TEST(MomentSeed, ReproducesMean) {
  const Mean2 m = mean(moment_seed(0.3, 0.8));
  EXPECT_NEAR(m.x, 0.3, 1e-15);
  EXPECT_NEAR(m.y, 0.8, 1e-15);
  const BetaParams clamped = moment_seed(0.9999, 0.9999);
  EXPECT_GE(clamped[3], kAlphaMin);
}

TEST(Fit, RecoveryFixture) {
  const Sample s = recovery_sample(500, 6);
  FitConfig cfg;
  const FitResult r = fit(s.data, 2, cfg);
  EXPECT_GE(clustering_accuracy(s.labels, predict(r.responsibilities)), 0.9);
  EXPECT_EQ(predict(r.responsibilities), predict(r.model, s.data));
  EXPECT_EQ(r.trace.log_likelihood_per_epoch.size(), static_cast<std::size_t>(r.trace.epochs_run));
  EXPECT_NEAR(r.log_likelihood, log_likelihood(r.model, s.data), 1e-9);
}

TEST(Fit, LikelihoodAscends) {
  const LabeledDataset ds = gen_aniso(150, 1, 7);
  const FitResult r = fit(ds.data, 3, quick_config(7));
  const auto& ll = r.trace.log_likelihood_per_epoch;
  for (std::size_t i = 1; i < ll.size(); ++i) EXPECT_GE(ll[i], ll[i - 1] - 1e-6) << i;
}

TEST(Fit, SingleCluster) {
  const Sample s = recovery_sample(120, 8);
  const FitResult r = fit(s.data, 1, quick_config(1));
  EXPECT_EQ(r.model.weights(), std::vector<double>{1.0});
  EXPECT_EQ(predict(r.responsibilities), std::vector<int>(120, 0));
}

TEST(Fit, DeterministicUnderSeed) {
  const Sample s = recovery_sample(150, 9);
  const FitResult a = fit(s.data, 2, quick_config(3));
  const FitResult b = fit(s.data, 2, quick_config(3));
  EXPECT_EQ(a.model, b.model);
  EXPECT_EQ(a.trace.log_likelihood_per_epoch, b.trace.log_likelihood_per_epoch);
}

TEST(Fit, PermutationEquivariant) {
  const Sample s = recovery_sample(150, 10);
  const MixtureModel init = initial_model(s.data, 2, 4);
  const MixtureModel swapped({init.weights()[1], init.weights()[0]},
                             {init.components()[1], init.components()[0]});
  const FitResult a = fit_from(init, s.data, quick_config(0));
  const FitResult b = fit_from(swapped, s.data, quick_config(0));
  EXPECT_NEAR(a.log_likelihood, b.log_likelihood, 1e-6);
  for (std::size_t c = 0; c < 2; ++c) {
    EXPECT_NEAR(a.model.weights()[c], b.model.weights()[1 - c], 1e-6);
    for (std::size_t j = 0; j < 4; ++j) {
      EXPECT_NEAR(a.model.components()[c][j], b.model.components()[1 - c][j], 1e-6);
    }
  }
}

TEST(Fit, RejectsTooFewPoints) {
  const Sample s = recovery_sample(3, 11);
  EXPECT_THROW(fit(s.data, 4), std::invalid_argument);
  FitConfig bad;
  bad.restarts = 0;
  EXPECT_THROW(fit(s.data, 1, bad), std::invalid_argument);
}

TEST(Predict, TiesGoToLowestIndex) {
  Responsibilities r(1, 2);
  r(0, 0) = 0.5;
  r(0, 1) = 0.5;
  EXPECT_EQ(predict(r), std::vector<int>{0});
}

TEST(Sample, WeightsAndMeans) {
  Rng rng(12);
  const Sample s = sample(kRecovery, 100000, rng);
  double zeros = 0, sx = 0;
  for (std::size_t i = 0; i < s.labels.size(); ++i) {
    if (s.labels[i] == 0) {
      zeros += 1;
      sx += s.data[i].x();
    }
  }
  const double n = static_cast<double>(s.labels.size());
  EXPECT_NEAR(zeros / n, 0.5, 3 * std::sqrt(0.25 / n));
  const Mean2 m = mean(kRecovery.components()[0]);
  const Mean2 v = variance(kRecovery.components()[0]);
  EXPECT_NEAR(sx / zeros, m.x, 4 * std::sqrt(v.x / zeros));

  Rng single(1);
  const Sample one = sample(MixtureModel({1.0}, {BetaParams(1, 1, 1, 1)}), 50, single);
  EXPECT_EQ(one.labels, std::vector<int>(50, 0));
}

TEST(ModelDocument, RoundTripBitwise) {
  const MixtureModel m({0.1 + 0.2, 1 - (0.1 + 0.2)},
                       {BetaParams(1.0 / 3.0, 2e-3, 49.999999999999993, 7.1),
                        BetaParams(kAlphaMin, kAlphaMax, 0.1, 0.7)});
  EXPECT_EQ(load_model(save_model(m)), m);
  const auto path = std::filesystem::temp_directory_path() / "betamix_model.txt";
  save_model_file(m, path);
  EXPECT_EQ(load_model_file(path), m);
  std::filesystem::remove(path);
}

TEST(ModelDocument, ToleratesCommentsAndCrlf) {
  const std::string doc =
      "fbbmm-model/1\r\n# comment\r\nclusters 1\r\n\r\nweights 1\r\nalpha 1 2 3 4\r\n";
  EXPECT_EQ(load_model(doc), MixtureModel({1.0}, {BetaParams(1, 2, 3, 4)}));
}

TEST(ModelDocument, RejectsInvariantViolations) {
  const auto error_of = [](const std::string& doc) {
    try {
      load_model(doc);
    } catch (const ModelFormatError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  const std::string head = "fbbmm-model/1\nclusters 2\n";
  EXPECT_NE(error_of(head + "weights 0.5 0.4\nalpha 1 1 1 1\nalpha 1 1 1 1\n").find("weights"),
            std::string::npos);
  EXPECT_NE(error_of(head + "weights 0.5 0.5\nalpha 1 1 1 1\nalpha 1 0 1 1\n").find("ALPHA_MIN"),
            std::string::npos);
  EXPECT_FALSE(error_of("other/1\nclusters 1\nweights 1\nalpha 1 1 1 1\n").empty());
  EXPECT_FALSE(error_of(head + "weights 0.5 0.5\nalpha 1 1 1 1\n").empty());
  EXPECT_FALSE(error_of(head + "weights 0.5 0.5\nalpha 1 1 1 1\nalpha 1 1 1 x\n").empty());
}
