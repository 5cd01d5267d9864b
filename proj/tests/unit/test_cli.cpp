#include "cli.hpp"

#include "lhspline/csv.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <filesystem>
#include <sstream>

namespace fs = std::filesystem;
using lhspline::oracle::TempDir;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = lhspline::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

void expect_error_json(const Outcome& o, int code, const std::string& kind) {
  EXPECT_EQ(o.code, code) << o.err;
  const auto j = nlohmann::json::parse(o.err);
  EXPECT_EQ(j["error"]["kind"], kind);
  EXPECT_EQ(j["error"]["exit_code"], code);
  EXPECT_FALSE(j["error"]["message"].get<std::string>().empty());
}

std::string simulate_into(const TempDir& dir, std::size_t days, const std::string& seed = "3") {
  const auto o = run({"--output-dir", dir.path().string(), "simulate", "--n", std::to_string(days), "--seed", seed});
  EXPECT_EQ(o.code, 0) << o.err;
  return (dir.path() / "simulated.csv").string();
}

}  // namespace

TEST(Cli, UsageErrors) {
  expect_error_json(run({}), 2, "usage");
  expect_error_json(run({"bogus"}), 2, "usage");
  expect_error_json(run({"fit"}), 2, "usage");
  expect_error_json(run({"study", "--replicates", "abc"}), 2, "usage");
  TempDir dir("cli-usage");
  const auto input = simulate_into(dir, 4000);
  expect_error_json(run({"--output-dir", dir.path().string(), "fit", "--input", input, "--lambda-mode", "magic"}),
                    2, "usage");
  expect_error_json(run({"--output-dir", dir.path().string(), "fit", "--input", input, "--bins", "1"}), 2, "usage");
}

TEST(Cli, DataErrors) {
  TempDir dir("cli-data");
  expect_error_json(run({"--output-dir", dir.path().string(), "fit", "--input", "/nonexistent/x.csv"}), 3, "data");
  lhspline::csv::write_text(dir.path() / "bad.csv", "DATE,PRCP\n2000-01-01,zz\n");
  expect_error_json(run({"--output-dir", dir.path().string(), "fit", "--input", (dir.path() / "bad.csv").string()}),
                    3, "data");
}

TEST(Cli, NumericError) {
  // three wet days cannot support a spline fit with an integrable tail
  TempDir dir("cli-numeric");
  lhspline::csv::write_text(dir.path() / "tiny.csv", "DATE,PRCP\n2000-01-01,1\n2000-01-02,2\n2000-01-03,50\n");
  const auto o = run({"--output-dir", dir.path().string(), "fit", "--input", (dir.path() / "tiny.csv").string(),
                      "--bins", "3", "--lambda-mode", "fixed:1e-6", "--extension", "1"});
  expect_error_json(o, 4, "numeric");
}

TEST(Cli, FitWritesArtifactsDeterministically) {
  TempDir a("cli-fit-a"), b("cli-fit-b");
  const auto input = simulate_into(a, 8000);
  const std::vector<std::string> files{"fit-report.txt", "density-grid.csv", "histogram.csv",
                                       "return-levels.csv", "intervals.csv"};
  for (const auto* dir : {&a, &b}) {
    const auto o = run({"--output-dir", dir->path().string(), "fit", "--input", input, "--draws", "200", "--seed", "4"});
    ASSERT_EQ(o.code, 0) << o.err;
  }
  for (const auto& f : files) {
    ASSERT_TRUE(fs::exists(a.path() / f)) << f;
    EXPECT_EQ(lhspline::csv::read_text(a.path() / f), lhspline::csv::read_text(b.path() / f)) << f;
  }
  const auto rl = lhspline::csv::read_text(a.path() / "return-levels.csv");
  EXPECT_NE(rl.find("\n100,"), std::string::npos);
}

TEST(Cli, OutputDirFromEnvironment) {
  TempDir dir("cli-env");
  ::setenv("LHSPLINE_OUTPUT_DIR", dir.path().c_str(), 1);
  const auto o = run({"simulate", "--n", "10", "--seed", "1"});
  ::unsetenv("LHSPLINE_OUTPUT_DIR");
  EXPECT_EQ(o.code, 0) << o.err;
  EXPECT_TRUE(fs::exists(dir.path() / "simulated.csv"));
}

TEST(Cli, DiagnoseAndReturns) {
  TempDir dir("cli-diag");
  const auto input = simulate_into(dir, 20000);
  auto o = run({"--output-dir", dir.path().string(), "diagnose", "--input", input});
  ASSERT_EQ(o.code, 0) << o.err;
  for (const auto* f : {"mean-residual-life.csv", "shape-stability.csv", "annual-maxima.csv"}) {
    EXPECT_TRUE(fs::exists(dir.path() / f)) << f;
  }
  o = run({"--output-dir", dir.path().string(), "returns", "--input", input, "--event", "150", "--threshold", "30",
           "--draws", "200"});
  ASSERT_EQ(o.code, 0) << o.err;
  const auto text = lhspline::csv::read_text(dir.path() / "returns.csv");
  EXPECT_NE(text.find("POT"), std::string::npos);
  EXPECT_NE(text.find("EGPD"), std::string::npos);
}
