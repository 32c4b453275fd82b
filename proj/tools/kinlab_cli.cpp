#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <omp.h>

#include "CLI11.hpp"
#include "kinlab/config.hpp"
#include "kinlab/experiments.hpp"

namespace {

enum Exit { kOk = 0, kExperimentFailed = 1, kBadConfig = 2, kRuntime = 3 };

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw kinlab::ConfigError({{"<file>", "cannot read '" + path + "'"}});
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// Parses the file; a positional experiment name fills in (or must match) the
// "experiment" key so params and beta are checked against the right entry.
kinlab::RunConfig load(const std::string& path, const std::string& experiment) {
  const std::string text = read_file(path);
  kinlab::ConfigResult res = kinlab::parse_config(text);
  if (res.ok() && !experiment.empty() && res.config->experiment.empty()) {
    nlohmann::json j = nlohmann::json::parse(text);
    j["experiment"] = experiment;
    res = kinlab::parse_config(j.dump(2));
    if (res.config) res.config->text = text;
  }
  if (!res.ok()) throw kinlab::ConfigError(res.issues);
  if (!experiment.empty() && res.config->experiment != experiment)
    throw kinlab::ConfigError({{"experiment", "config names '" + res.config->experiment +
                                                  "' but the command asked for '" +
                                                  experiment + "'"}});
  return *res.config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kinlab: kinetic boundary-value laboratory"};
  app.require_subcommand(1);

  std::string config_path, out_dir, experiment;
  std::uint64_t seed = 0;
  int threads = 0;

  auto* validate = app.add_subcommand("validate", "check a run config without solving");
  validate->add_option("--config", config_path, "run config (JSON)")->required();

  auto* run = app.add_subcommand("run", "run one registered experiment");
  run->add_option("experiment", experiment, "experiment name")->required();
  run->add_option("--config", config_path, "run config (JSON)")->required();
  auto* seed_opt = run->add_option("--seed", seed, "64-bit seed (overrides the config)");
  auto* out_opt = run->add_option("--out", out_dir, "output directory (overrides the config)");
  run->add_option("--threads", threads, "OpenMP threads")->check(CLI::PositiveNumber);

  auto* list = app.add_subcommand("list", "list registered experiments");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*list) {
      for (const auto& e : kinlab::experiment_registry()) {
        std::cout << e.name << "  " << e.description << "\n    params:";
        for (const auto& p : e.params) std::cout << " " << p;
        std::cout << "\n";
      }
      return kOk;
    }
    if (*validate) {
      const kinlab::ConfigResult res = kinlab::validate_config(config_path);
      if (!res.ok()) {
        std::cerr << "invalid configuration " << config_path << ":\n"
                  << kinlab::format_issues(res.issues);
        return kBadConfig;
      }
      std::cout << "ok: " << config_path << "\n";
      return kOk;
    }

    kinlab::RunConfig cfg = load(config_path, experiment);
    if (*seed_opt) cfg.seed = seed;
    if (*out_opt) cfg.output_dir = out_dir;
    if (threads > 0) omp_set_num_threads(threads);
    const kinlab::ExperimentOutcome out = kinlab::run_experiment(cfg);
    std::printf("%s: %s (%.1f s) -> %s\n", out.name.c_str(), out.ok ? "ok" : "FAILED",
                out.wall_seconds, cfg.output_dir.c_str());
    for (const auto& f : out.failures) std::printf("  failed invariant: %s\n", f.c_str());
    return out.ok ? kOk : kExperimentFailed;
  } catch (const kinlab::ConfigError& e) {
    std::cerr << e.what();
    return kBadConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
}
