#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "kinlab/common.hpp"

namespace kinlab {

struct RunConfig;

struct ExperimentInfo {
  std::string name;
  std::string description;
  std::vector<std::string> params;  // accepted keys of the "params" object
  bool large_amplitude = false;     // uses the stronger beta threshold
};

const std::vector<ExperimentInfo>& experiment_registry();
const ExperimentInfo* find_experiment(const std::string& name);

struct ExperimentOutcome {
  std::string name;
  bool ok = true;
  std::vector<std::string> failures;  // names of the invariants that failed
  nlohmann::json report;
  double wall_seconds = 0.0;
};

// Runs the named experiment, writing report.json, CSV series and
// manifest.json into cfg.output_dir.
ExperimentOutcome run_experiment(const RunConfig& cfg);

}  // namespace kinlab
