#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "kinlab/common.hpp"
#include "kinlab/domain.hpp"
#include "kinlab/steady.hpp"
#include "kinlab/transient.hpp"
#include "kinlab/velocity.hpp"

namespace kinlab {

struct DomainConfig {
  std::string shape = "slab";  // "slab" or "ball"
  double half_width = 0.5;     // slab
  int cells = 16;              // slab x cells
  double radius = 1.0;         // ball

  DomainSpec spec() const;
};

struct GridConfig {
  double v_max = 5.0;
  int n_per_axis = 16;
};

struct WallConfig {
  std::string profile = "axis_linear";  // constant, axis_linear, harmonic
  double delta = 0.0;
  int axis = 0;

  WallTemperature temperature(double extent) const;
};

struct RunConfig {
  std::string experiment;
  std::uint64_t seed = 1;
  std::string output_dir = "out";
  std::string cache_dir = "cache";
  DomainConfig domain;
  GridConfig grid;
  double kappa = -1.0;
  double b0 = 1.0;
  WeightSpec weight;
  WallConfig wall;
  SteadyConfig steady;
  TransientConfig transient;
  nlohmann::json params = nlohmann::json::object();  // experiment knobs
  std::string text;                                  // the file as read
};

struct ConfigIssue {
  std::string parameter;
  std::string message;
};

struct ConfigResult {
  std::optional<RunConfig> config;
  std::vector<ConfigIssue> issues;
  bool ok() const { return config.has_value() && issues.empty(); }
};

struct ConfigError : Error {
  std::vector<ConfigIssue> issues;
  explicit ConfigError(std::vector<ConfigIssue> list);
};

// Parses and checks every admissibility rule; never runs a solver.
ConfigResult parse_config(const std::string& text);
ConfigResult validate_config(const std::string& path);

// Throws ConfigError listing every issue.
RunConfig load_config(const std::string& path);

// Smallest admissible beta for an experiment (theorem hypotheses in force).
double beta_threshold(double kappa, bool large_amplitude);

std::string format_issues(const std::vector<ConfigIssue>& issues);

}  // namespace kinlab
