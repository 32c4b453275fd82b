#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "kinlab/config.hpp"
#include "kinlab/experiments.hpp"

using namespace kinlab;
namespace fs = std::filesystem;

namespace {

const char* kGood = R"({
  "experiment": "envelope_oracle",
  "seed": 7,
  "kappa": -1.0,
  "weight": { "zeta": 2.0, "varpi": 0.1 },
  "wall": { "delta": 0.0 },
  "params": { "points": 80 }
})";

std::string with(const std::string& from, const std::string& to) {
  std::string s = kGood;
  const auto p = s.find(from);
  EXPECT_NE(p, std::string::npos) << from;
  return s.replace(p, from.size(), to);
}

bool mentions(const ConfigResult& r, const std::string& param, const std::string& text) {
  for (const auto& i : r.issues)
    if (i.parameter == param && i.message.find(text) != std::string::npos) return true;
  return false;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::path(::testing::TempDir()) / ("kinlab_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST(CliRunner, WellFormedConfigAccepted) {
  const ConfigResult r = parse_config(kGood);
  ASSERT_TRUE(r.ok()) << format_issues(r.issues);
  EXPECT_EQ(r.config->seed, 7u);
  EXPECT_GT(r.config->weight.beta, 4.0);
}

TEST(CliRunner, VarpiAboveOneEighthRejected) {
  const ConfigResult r = parse_config(with("\"varpi\": 0.1", "\"varpi\": 0.2"));
  EXPECT_FALSE(r.ok());
  EXPECT_TRUE(mentions(r, "weight.varpi", "1/8"));
}

TEST(CliRunner, KappaOutOfRangeRejected) {
  const ConfigResult r = parse_config(with("\"kappa\": -1.0", "\"kappa\": -3.5"));
  EXPECT_FALSE(r.ok());
  EXPECT_TRUE(mentions(r, "kappa", "(-3, 0)"));
}

TEST(CliRunner, BetaThresholdEnforced) {
  const ConfigResult r =
      parse_config(with("\"varpi\": 0.1", "\"varpi\": 0.1, \"beta\": 3.5"));
  EXPECT_TRUE(mentions(r, "weight.beta", "must exceed"));
  EXPECT_DOUBLE_EQ(beta_threshold(-1.0, false), 4.0);
  EXPECT_DOUBLE_EQ(beta_threshold(-0.5, true), 4.0);
}

TEST(CliRunner, PhysicsParametersHaveNoDefaults) {
  const ConfigResult r = parse_config(with("\"kappa\": -1.0,", ""));
  EXPECT_FALSE(r.ok());
  bool found = false;
  for (const auto& i : r.issues) found = found || i.parameter == "kappa";
  EXPECT_TRUE(found);
}

TEST(CliRunner, UnknownKeysRejected) {
  EXPECT_FALSE(parse_config(with("\"seed\": 7", "\"seed\": 7, \"sede\": 1")).ok());
  EXPECT_FALSE(parse_config(with("\"points\": 80", "\"points\": 80, \"bogus\": 1")).ok());
}

TEST(CliRunner, ParseErrorReportsLineAndColumn) {
  const ConfigResult r = parse_config("{\n  \"kappa\": -1.0,\n  oops\n}");
  ASSERT_FALSE(r.issues.empty());
  EXPECT_NE(r.issues.front().message.find("line 3"), std::string::npos)
      << r.issues.front().message;
}

TEST(CliRunner, RegistryListsEveryExperiment) {
  for (const char* n : {"kernel_checks", "cycle_measure", "steady_delta_scan", "decay_scan",
                        "envelope_oracle", "local_existence", "large_amplitude"})
    EXPECT_NE(find_experiment(n), nullptr) << n;
  EXPECT_EQ(find_experiment("nope"), nullptr);
}

TEST(CliRunner, EnvelopeRunWritesManifestAndReport) {
  RunConfig cfg = *parse_config(kGood).config;
  cfg.output_dir = scratch("manifest").string();
  const ExperimentOutcome out = run_experiment(cfg);
  EXPECT_TRUE(out.ok);
  const double a = out.report.at("alpha_hat").get<double>();
  EXPECT_GE(a, 0.653);
  EXPECT_LE(a, 0.680);
  const fs::path dir(cfg.output_dir);
  EXPECT_TRUE(fs::exists(dir / "report.json"));
  EXPECT_EQ(slurp(dir / "config.json"), kGood);
  const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  EXPECT_EQ(manifest.at("seed").get<std::uint64_t>(), 7u);
  EXPECT_TRUE(manifest.contains("grid_hash"));
  EXPECT_TRUE(manifest.contains("wall_clock_seconds"));
}

TEST(CliRunner, IdenticalSeedGivesByteIdenticalCsv) {
  RunConfig cfg = *parse_config(R"({
    "experiment": "cycle_measure", "seed": 3, "kappa": -1.0,
    "domain": { "shape": "ball", "radius": 1.0 },
    "weight": { "zeta": 2.0, "varpi": 0.1 }, "wall": { "profile": "harmonic", "delta": 0.01 },
    "params": { "T0s": [1.0], "ks": [1, 2, 4], "n_samples": 500, "moment_samples": 1000 }
  })").config;
  cfg.output_dir = scratch("det_a").string();
  run_experiment(cfg);
  const std::string a = slurp(fs::path(cfg.output_dir) / "cycle_measure.csv");
  cfg.output_dir = scratch("det_b").string();
  run_experiment(cfg);
  const std::string b = slurp(fs::path(cfg.output_dir) / "cycle_measure.csv");
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, b);
}

TEST(CliRunner, CliExitCodes) {
  const fs::path dir = scratch("cli");
  const fs::path bad = dir / "bad.json";
  std::ofstream(bad) << with("\"varpi\": 0.1", "\"varpi\": 0.2");
  const fs::path good = dir / "good.json";
  std::ofstream(good) << kGood;
  const std::string cli = KINLAB_CLI;
  auto run = [](const std::string& cmd) { return WEXITSTATUS(std::system((cmd + " > /dev/null 2>&1").c_str())); };
  EXPECT_EQ(run(cli + " validate --config " + bad.string()), 2);
  EXPECT_EQ(run(cli + " validate --config " + good.string()), 0);
  EXPECT_EQ(run(cli + " list"), 0);
  EXPECT_EQ(run(cli + " run envelope_oracle --config " + good.string() + " --out " + (dir / "o").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "o" / "manifest.json"));
  EXPECT_EQ(run(cli + " run decay_scan --config " + good.string()), 2);
}
