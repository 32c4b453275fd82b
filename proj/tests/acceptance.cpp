// Acceptance driver: runs the experiment configs in configs/ and prints one
// PASS/FAIL line per criterion. Exit status is nonzero if any criterion fails.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "kinlab/analysis.hpp"
#include "kinlab/config.hpp"
#include "kinlab/experiments.hpp"
#include "kinlab/rng.hpp"

using namespace kinlab;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string work_dir = "acceptance_run";
std::string cache_dir;
std::map<std::string, ExperimentOutcome> outcomes;

const ExperimentOutcome& outcome(const std::string& name) {
  auto it = outcomes.find(name);
  if (it != outcomes.end()) return it->second;
  RunConfig cfg = load_config(std::string(KINLAB_CONFIG_DIR) + "/" + name + ".json");
  cfg.output_dir = (fs::path(work_dir) / name).string();
  cfg.cache_dir = cache_dir;
  std::fprintf(stderr, "running %s ...\n", name.c_str());
  ExperimentOutcome out;
  try {
    out = run_experiment(cfg);
  } catch (const std::exception& e) {
    out.name = name;
    out.ok = false;
    out.failures = {std::string("experiment aborted: ") + e.what()};
    out.report = {{"checks", json::array({{{"invariant", "experiment aborted"},
                                            {"ok", false},
                                            {"detail", e.what()}}})}};
  }
  std::fprintf(stderr, "  %s done in %.1f s\n", name.c_str(), out.wall_seconds);
  return outcomes.emplace(name, std::move(out)).first->second;
}

struct Verdict {
  bool ok = true;
  std::string detail;
};

// All checks of an experiment whose invariant name starts with one of the prefixes.
Verdict checks(const std::string& experiment, const std::vector<std::string>& prefixes) {
  const ExperimentOutcome& out = outcome(experiment);
  Verdict v;
  int matched = 0;
  for (const auto& c : out.report.at("checks")) {
    const std::string name = c.at("invariant");
    bool hit = name == "experiment aborted";
    for (const auto& p : prefixes) hit = hit || name.rfind(p, 0) == 0;
    if (!hit) continue;
    ++matched;
    if (!c.at("ok").get<bool>()) {
      v.ok = false;
      v.detail += "[" + name + " " + c.at("detail").dump() + "] ";
    }
  }
  if (matched == 0) {
    v.ok = false;
    v.detail = "no matching checks in " + experiment;
  }
  return v;
}

std::string num(const json& j, const char* key) {
  return j.contains(key) ? j.at(key).dump() : "n/a";
}

Verdict criterion1() {
  Verdict v = checks("envelope_oracle", {"envelope exponent", "envelope sweep"});
  const json& r = outcome("envelope_oracle").report;
  v.detail = "worst rel err " + num(r, "worst_relative_error") + ", " + num(r, "sweep_seconds") +
             " s; " + v.detail;
  return v;
}

Verdict criterion2() {
  Verdict v = checks("steady_delta_scan", {"sup_w ratio", "isothermal", "steady scan under"});
  const json& r = outcome("steady_delta_scan").report;
  v.detail = "ratio " + num(r, "scaling_ratio") + ", " + num(r, "seconds") + " s; " + v.detail;
  return v;
}

Verdict criterion3() {
  Verdict v = checks("steady_delta_scan", {"outer contraction", "lambda continuation"});
  const json& r = outcome("steady_delta_scan").report;
  v.detail = "contraction " + num(r, "contraction_delta_1e-3") + "; " + v.detail;
  return v;
}

Verdict criterion4() {
  Verdict v = checks("kernel_checks", {"cutoff slope", "cutoff sweep"});
  const json& r = outcome("kernel_checks").report;
  std::string s;
  if (r.contains("cutoff_scaling"))
    for (const auto& e : r.at("cutoff_scaling"))
      s += "k=" + e.at("kappa").dump() + " slope " + e.at("slope").dump() + " ";
  v.detail = s + "; " + v.detail;
  return v;
}

Verdict criterion5() {
  Verdict v = checks("kernel_checks", {"kernel symmetry", "L annihilates", "<Lf, f>"});
  const json& r = outcome("kernel_checks").report;
  v.detail = "symmetry " + num(r, "symmetry_defect") + ", min <Lf,f> " +
             num(r, "min_quadratic_form") + "; " + v.detail;
  return v;
}

Verdict criterion6() {
  Verdict v = checks("kernel_checks", {"flux normalization"});
  const json& r = outcome("kernel_checks").report;
  v.detail = num(r, "flux_normalization") + "; " + v.detail;
  return v;
}

Verdict criterion7() {
  Verdict v = checks("cycle_measure", {"cycle measure", "flux sampler"});
  const json& r = outcome("cycle_measure").report;
  v.detail = num(r, "per_T0") + "; " + v.detail;
  return v;
}

Verdict criterion8() {
  Verdict v = checks("local_existence", {"F >= 0", "halving M0", "fitted 1/(1+M0)", "step-size guard"});
  const json& r = outcome("local_existence").report;
  v.detail = num(r, "horizon") + "; " + v.detail;
  return v;
}

Verdict criterion9() {
  Verdict v = checks("decay_scan", {"mass drift", "drift halves"});
  const json& r = outcome("decay_scan").report;
  v.detail = num(r, "mass_drift") + "; " + v.detail;
  return v;
}

Verdict criterion10() {
  Verdict v = checks("decay_scan", {"decay exponent", "monotone-envelope", "decay run under"});
  const json& r = outcome("decay_scan").report;
  std::string s;
  if (r.contains("runs"))
    for (const auto& e : r.at("runs"))
      s += "alpha_hat " + num(e, "alpha_hat") + " vs " + num(e, "alpha") + ", " +
           num(e, "seconds") + " s ";
  v.detail = s + "; " + v.detail;
  return v;
}

Verdict criterion11() {
  CounterRng rng(2024, 0, "acceptance/iteration");
  int hyp = 0, viol = 0;
  for (int s = 0; s < 1000; ++s) {
    const int k = 1 + static_cast<int>(rng.uniform() * 6);
    const double D = rng.uniform();
    const int len = 4 * (k + 1) + static_cast<int>(rng.uniform() * 80);
    const auto a = random_iteration_sequence(rng, len, k, D);
    const IterationReport r = iteration_bound(a, k, D);
    hyp += r.hypothesis_violations;
    viol += r.bound_violations;
  }
  const double D = 0.4;
  const std::vector<double> c(50, 8.0 / 7.0 * D);
  const IterationReport r = iteration_bound(c, 3, D);
  const double gap = std::abs(c.back() - (r.A.back() / 8.0 + D));
  Verdict v;
  v.ok = hyp == 0 && viol == 0 && r.hypothesis_violations == 0 && gap <= 1e-14;
  v.detail = "violations " + std::to_string(viol) + " of 1000 sequences, fixed point gap " +
             std::to_string(gap);
  return v;
}

Verdict criterion12() {
  Verdict v = checks("large_amplitude", {"L^p growth"});
  const json& r = outcome("large_amplitude").report;
  v.detail = num(r, "growth") + "; " + v.detail;
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    if (!std::strcmp(argv[i], "--work") && i + 1 < argc)
      work_dir = argv[++i];
    else if (!std::strcmp(argv[i], "--cache") && i + 1 < argc)
      cache_dir = argv[++i];
    else if (!std::strcmp(argv[i], "--only") && i + 1 < argc)
      only.insert(std::atoi(argv[++i]));
  }
  if (cache_dir.empty()) cache_dir = (fs::path(work_dir) / "cache").string();
  fs::create_directories(work_dir);

  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"decay exponent of the envelope oracle within 2%", criterion1},
      {"steady sup norm linear in delta, zero at delta=0", criterion2},
      {"outer contraction <= 1/2 and continuation converges", criterion3},
      {"cutoff part scales like m^(3+kappa)", criterion4},
      {"kernel symmetry, collision invariants, <Lf,f> >= 0", criterion5},
      {"wall flux normalization", criterion6},
      {"cycle measure decreasing and below 1/2", criterion7},
      {"positivity and 1/(1+M0) horizon", criterion8},
      {"mass conservation and first-order drift", criterion9},
      {"transient decay exponent within 15%", criterion10},
      {"iteration lemma bound", criterion11},
      {"L^p growth constant stable across caps", criterion12},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v.ok = false;
      v.detail = e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!v.ok) ++failed;
    std::printf("%s criterion %2d: %s (%.1f s) %s\n", v.ok ? "PASS" : "FAIL", id,
                criteria[i].first.c_str(), secs, v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
