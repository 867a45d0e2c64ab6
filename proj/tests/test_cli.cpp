#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "betamix/cli.hpp"
#include "betamix/emfit.hpp"

namespace fs = std::filesystem;
using betamix::cli::run;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome call(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::size_t count_of(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) {
    ++n;
  }
  return n;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("betamix_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, GenerateEveryDataset) {
  for (const std::string& name : betamix::dataset_names()) {
    const std::string out = path(name + ".csv");
    ASSERT_EQ(call({"generate", "--dataset", name, "--n", "500", "--output", out}).code, 0);
    const std::string text = slurp(out);
    EXPECT_EQ(count_of(text, "\n"), 501u);
    EXPECT_EQ(text.substr(0, 12), "x,y,label\n0.");
    EXPECT_TRUE(fs::exists(out + ".manifest.json"));
  }
}

TEST_F(Cli, GenerateIsDeterministic) {
  call({"generate", "--dataset", "varied", "--seed", "5", "--output", path("a.csv")});
  call({"generate", "--dataset", "varied", "--seed", "5", "--output", path("b.csv")});
  EXPECT_EQ(slurp(path("a.csv")), slurp(path("b.csv")));
}

TEST_F(Cli, UsageErrors) {
  const Outcome bad = call({"generate", "--dataset", "spirals", "--output", path("x.csv")});
  EXPECT_EQ(bad.code, 2);
  EXPECT_NE(bad.err.find("Usage"), std::string::npos);
  EXPECT_EQ(call({}).code, 2);
  EXPECT_EQ(call({"fit", "--input", path("missing.csv"), "--clusters", "2", "--output",
                  path("m.txt")})
                .code,
            2);
  EXPECT_EQ(call({"--help"}).code, 0);
}

TEST_F(Cli, FitPredictSampleRoundTrip) {
  betamix::Rng rng(1);
  const betamix::MixtureModel truth(
      {0.5, 0.5}, {betamix::BetaParams(8, 2, 2, 2), betamix::BetaParams(2, 2, 2, 8)});
  const betamix::Sample s = betamix::sample(truth, 300, rng);
  betamix::write_csv(path("fixture.csv"), betamix::to_raw(s.data, &s.labels));

  const Outcome fit = call({"fit", "--input", path("fixture.csv"), "--labels", "--clusters", "2",
                            "--restarts", "1", "--output", path("model.txt")});
  ASSERT_EQ(fit.code, 0) << fit.err;
  const auto manifest = nlohmann::json::parse(slurp(path("model.txt.manifest.json")));
  EXPECT_EQ(manifest["command"], "fit");
  EXPECT_EQ(manifest["flags"]["clusters"], "2");
  EXPECT_EQ(manifest["flags"]["epochs"], "200");
  const int epochs = manifest["epochs_run"];
  EXPECT_EQ(count_of(slurp(path("model.txt.trace.csv")), "\n"), static_cast<std::size_t>(epochs) + 1);
  EXPECT_NO_THROW(betamix::load_model_file(path("model.txt")));

  ASSERT_EQ(call({"predict", "--model", path("model.txt"), "--input", path("fixture.csv"),
                  "--labels", "--output", path("pred.csv")})
                .code,
            0);
  const Outcome eval = call({"eval", "--truth", path("fixture.csv"), "--pred", path("pred.csv")});
  ASSERT_EQ(eval.code, 0);
  const double ca = std::stod(eval.out.substr(eval.out.find("CA ") + 3));
  EXPECT_GE(ca, 0.9);

  ASSERT_EQ(call({"sample", "--model", path("model.txt"), "--n", "50", "--seed", "3", "--output",
                  path("s1.csv")})
                .code,
            0);
  call({"sample", "--model", path("model.txt"), "--n", "50", "--seed", "3", "--output",
        path("s2.csv")});
  EXPECT_EQ(slurp(path("s1.csv")), slurp(path("s2.csv")));
  EXPECT_EQ(count_of(slurp(path("s1.csv")), "\n"), 51u);
}

TEST_F(Cli, FitRejectsTooFewPoints) {
  std::ofstream(path("tiny.csv")) << "0.1,0.2\n0.5,0.9\n0.3,0.3\n";
  EXPECT_EQ(call({"fit", "--input", path("tiny.csv"), "--clusters", "4", "--output",
                  path("m.txt")})
                .code,
            2);
}

TEST_F(Cli, FitNonConvergenceStillWritesModel) {
  call({"generate", "--dataset", "blobs", "--n", "90", "--output", path("b.csv")});
  const Outcome r = call({"fit", "--input", path("b.csv"), "--labels", "--clusters", "3",
                          "--epochs", "1", "--restarts", "1", "--output", path("m.txt")});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(slurp(path("m.txt")).find("# not converged"), std::string::npos);
  EXPECT_NO_THROW(betamix::load_model_file(path("m.txt")));
}

TEST_F(Cli, PredictColumnMismatch) {
  const betamix::MixtureModel m({1.0}, {betamix::BetaParams(1, 1, 1, 1)});
  betamix::save_model_file(m, path("m.txt"));
  std::ofstream(path("three.csv")) << "1,2,3\n4,5,7\n2,2,2\n";
  EXPECT_EQ(call({"predict", "--model", path("m.txt"), "--input", path("three.csv"), "--output",
                  path("p.csv")})
                .code,
            2);
  EXPECT_EQ(call({"predict", "--model", path("m.txt"), "--input", path("three.csv"), "--pca",
                  "--output", path("p.csv")})
                .code,
            0);
}

TEST_F(Cli, EvalWorkedExampleAndErrors) {
  std::ofstream(path("t.txt")) << "a\na\nb\nb\n";
  std::ofstream(path("p.txt")) << "b\nb\na\na\n";
  const Outcome r = call({"eval", "--truth", path("t.txt"), "--pred", path("p.txt")});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "CA 1.000000\nARI 1.000000\nAMI 1.000000\n");
  std::ofstream(path("short.txt")) << "a\nb\nb\n";
  EXPECT_EQ(call({"eval", "--truth", path("t.txt"), "--pred", path("short.txt")}).code, 2);
}

TEST_F(Cli, PlotScatter) {
  std::ofstream(path("pts.csv")) << "x,y,label\n0.1,0.2,0\n0.5,0.5,1\n0.9,0.3,0\n";
  ASSERT_EQ(call({"plot", "--input", path("pts.csv"), "--labels", "--output", path("a.svg")}).code,
            0);
  const std::string svg = slurp(path("a.svg"));
  EXPECT_EQ(count_of(svg, "<circle"), 3u);
  EXPECT_EQ(count_of(svg, "#1f77b4"), 2u);
  call({"plot", "--input", path("pts.csv"), "--labels", "--output", path("b.svg")});
  EXPECT_EQ(svg, slurp(path("b.svg")));
  std::ofstream(path("empty.csv")) << "";
  EXPECT_EQ(call({"plot", "--input", path("empty.csv"), "--output", path("e.svg")}).code, 2);
}

TEST_F(Cli, BenchSmall) {
  ASSERT_EQ(call({"bench", "--output", path("bench"), "--n", "60", "--seed", "3"}).code, 0);
  std::size_t svgs = 0;
  for (const auto& entry : fs::directory_iterator(path("bench"))) {
    svgs += entry.path().extension() == ".svg";
  }
  EXPECT_EQ(svgs, 15u);
  std::istringstream csv(slurp(path("bench/metrics.csv")));
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, "dataset,algorithm,CA,ARI,AMI");
  int rows = 0;
  while (std::getline(csv, line)) {
    ++rows;
    std::vector<double> v;
    std::istringstream fields(line);
    std::string field;
    int col = 0;
    while (std::getline(fields, field, ',')) {
      if (col++ >= 2) v.push_back(std::stod(field));
    }
    ASSERT_EQ(v.size(), 3u);
    EXPECT_GE(v[0], 0.0);
    EXPECT_LE(v[0], 1.0);
    EXPECT_LE(v[1], 1.0);
    EXPECT_LE(v[2], 1.0);
  }
  EXPECT_EQ(rows, 15);
}
