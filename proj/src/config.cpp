#include "kinlab/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "kinlab/experiments.hpp"

namespace kinlab {

using nlohmann::json;

DomainSpec DomainConfig::spec() const {
  if (shape == "ball") return DomainSpec::ball(radius);
  return DomainSpec::slab(half_width);
}

WallTemperature WallConfig::temperature(double extent) const {
  WallTemperature w;
  if (profile == "constant")
    w.profile = WallProfile::Constant;
  else if (profile == "harmonic")
    w.profile = WallProfile::Harmonic;
  else
    w.profile = WallProfile::AxisLinear;
  w.delta = delta;
  w.axis = axis;
  w.extent = extent;
  return w;
}

ConfigError::ConfigError(std::vector<ConfigIssue> list)
    : Error("invalid configuration:\n" + format_issues(list)), issues(std::move(list)) {}

std::string format_issues(const std::vector<ConfigIssue>& issues) {
  std::ostringstream os;
  for (const auto& i : issues) os << "  " << i.parameter << ": " << i.message << "\n";
  return os.str();
}

double beta_threshold(double kappa, bool large_amplitude) {
  const double b = 3.0 + std::abs(kappa);
  return large_amplitude ? std::max(b, 4.0) : b;
}

namespace {

std::string fmt(double x) {
  std::ostringstream os;
  os << x;
  return os.str();
}

// Collects issues while walking the tree; every key read is remembered so
// leftovers can be reported as unknown.
class Reader {
 public:
  explicit Reader(std::vector<ConfigIssue>& issues) : issues_(issues) {}

  void issue(const std::string& p, const std::string& m) { issues_.push_back({p, m}); }

  const json* object(const json& parent, const std::string& key, const std::string& path) {
    if (!parent.contains(key)) return nullptr;
    const json& v = parent.at(key);
    if (!v.is_object()) {
      issue(path, "must be an object");
      return nullptr;
    }
    return &v;
  }

  void unknown(const json& obj, const std::set<std::string>& known, const std::string& prefix) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
      if (!known.count(it.key())) issue(prefix + it.key(), "unknown key");
  }

  std::optional<double> number(const json& obj, const std::string& key, const std::string& path,
                               bool required) {
    if (!obj.contains(key)) {
      if (required) issue(path, "is required (no default for this parameter)");
      return std::nullopt;
    }
    const json& v = obj.at(key);
    if (!v.is_number()) {
      issue(path, "must be a number");
      return std::nullopt;
    }
    const double x = v.get<double>();
    if (!std::isfinite(x)) {
      issue(path, "must be finite");
      return std::nullopt;
    }
    return x;
  }

  std::optional<long long> integer(const json& obj, const std::string& key,
                                   const std::string& path) {
    if (!obj.contains(key)) return std::nullopt;
    const json& v = obj.at(key);
    if (!v.is_number_integer()) {
      issue(path, "must be an integer");
      return std::nullopt;
    }
    return v.get<long long>();
  }

  std::optional<std::string> string(const json& obj, const std::string& key,
                                    const std::string& path) {
    if (!obj.contains(key)) return std::nullopt;
    const json& v = obj.at(key);
    if (!v.is_string()) {
      issue(path, "must be a string");
      return std::nullopt;
    }
    return v.get<std::string>();
  }

  std::optional<bool> boolean(const json& obj, const std::string& key, const std::string& path) {
    if (!obj.contains(key)) return std::nullopt;
    const json& v = obj.at(key);
    if (!v.is_boolean()) {
      issue(path, "must be true or false");
      return std::nullopt;
    }
    return v.get<bool>();
  }

  std::optional<std::vector<double>> numbers(const json& obj, const std::string& key,
                                             const std::string& path) {
    if (!obj.contains(key)) return std::nullopt;
    const json& v = obj.at(key);
    if (!v.is_array() || v.empty()) {
      issue(path, "must be a non-empty array of numbers");
      return std::nullopt;
    }
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) {
        issue(path, "must be a non-empty array of numbers");
        return std::nullopt;
      }
      out.push_back(e.get<double>());
    }
    return out;
  }

 private:
  std::vector<ConfigIssue>& issues_;
};

void line_column(const std::string& text, std::size_t byte, std::size_t& line, std::size_t& col) {
  line = 1;
  col = 1;
  for (std::size_t i = 0; i < std::min(byte > 0 ? byte - 1 : 0, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
}

}  // namespace

ConfigResult parse_config(const std::string& text) {
  ConfigResult res;
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line, col;
    line_column(text, e.byte, line, col);
    std::string what = e.what();
    const auto pos = what.find(": ");
    if (pos != std::string::npos) what = what.substr(pos + 2);
    res.issues.push_back({"<file>", "parse error at line " + std::to_string(line) + ", column " +
                                        std::to_string(col) + ": " + what});
    return res;
  }
  if (!root.is_object()) {
    res.issues.push_back({"<file>", "top level must be an object"});
    return res;
  }
  Reader rd(res.issues);
  RunConfig c;
  c.text = text;
  rd.unknown(root,
             {"experiment", "seed", "output_dir", "cache_dir", "domain", "grid", "kappa", "b0",
              "weight", "wall", "steady", "transient", "params"},
             "");

  if (auto s = rd.string(root, "experiment", "experiment")) c.experiment = *s;
  if (root.contains("seed")) {
    const json& s = root.at("seed");
    if (s.is_number_unsigned())
      c.seed = s.get<std::uint64_t>();
    else if (s.is_number_integer() && s.get<long long>() >= 0)
      c.seed = static_cast<std::uint64_t>(s.get<long long>());
    else
      rd.issue("seed", "must be an integer in [0, 2^64)");
  }
  if (auto s = rd.string(root, "output_dir", "output_dir")) c.output_dir = *s;
  if (auto s = rd.string(root, "cache_dir", "cache_dir")) c.cache_dir = *s;

  // physics: no defaults
  if (auto k = rd.number(root, "kappa", "kappa", true)) {
    c.kappa = *k;
    if (!(c.kappa > -3.0 && c.kappa < 0.0))
      rd.issue("kappa", "= " + fmt(c.kappa) + " outside the admissible range (-3, 0)");
  }
  if (auto b = rd.number(root, "b0", "b0", false)) {
    c.b0 = *b;
    if (!(c.b0 > 0.0)) rd.issue("b0", "= " + fmt(c.b0) + " must be > 0");
  }

  const ExperimentInfo* info = c.experiment.empty() ? nullptr : find_experiment(c.experiment);
  if (!c.experiment.empty() && !info)
    rd.issue("experiment", "'" + c.experiment + "' is not a registered experiment");

  if (const json* w = rd.object(root, "weight", "weight")) {
    rd.unknown(*w, {"beta", "varpi", "zeta"}, "weight.");
    auto zeta = rd.number(*w, "zeta", "weight.zeta", true);
    auto varpi = rd.number(*w, "varpi", "weight.varpi", true);
    auto beta = rd.number(*w, "beta", "weight.beta", false);
    const bool large = info && info->large_amplitude;
    const double bmin = beta_threshold(c.kappa, large);
    if (zeta) {
      c.weight.zeta = *zeta;
      if (!(*zeta > 0.0 && *zeta <= 2.0))
        rd.issue("weight.zeta", "= " + fmt(*zeta) + " outside the admissible range (0, 2]");
    }
    if (varpi) {
      c.weight.varpi = *varpi;
      if (zeta && *zeta == 2.0 && !(*varpi > 0.0 && *varpi < 0.125))
        rd.issue("weight.varpi",
                 "= " + fmt(*varpi) + " outside (0, 1/8); the 1/8 bound applies when zeta = 2");
      else if (zeta && *zeta < 2.0 && !(*varpi > 0.0))
        rd.issue("weight.varpi", "= " + fmt(*varpi) + " must be > 0 when 0 < zeta < 2");
    }
    c.weight.beta = beta ? *beta : bmin + 1.0;
    if (beta && !(*beta > bmin))
      rd.issue("weight.beta", "= " + fmt(*beta) + " must exceed " + fmt(bmin) +
                                  (large ? " (max(3+|kappa|, 4))" : " (3+|kappa|)"));
  } else {
    rd.issue("weight", "is required (weight.zeta and weight.varpi have no defaults)");
  }

  if (const json* d = rd.object(root, "domain", "domain")) {
    rd.unknown(*d, {"shape", "half_width", "cells", "radius"}, "domain.");
    if (auto s = rd.string(*d, "shape", "domain.shape")) {
      c.domain.shape = *s;
      if (*s != "slab" && *s != "ball") rd.issue("domain.shape", "must be \"slab\" or \"ball\"");
    }
    if (auto x = rd.number(*d, "half_width", "domain.half_width", false)) {
      c.domain.half_width = *x;
      if (!(*x > 0.0)) rd.issue("domain.half_width", "= " + fmt(*x) + " must be > 0");
    }
    if (auto x = rd.integer(*d, "cells", "domain.cells")) {
      c.domain.cells = static_cast<int>(*x);
      if (*x < 2 || *x > 4096) rd.issue("domain.cells", "= " + fmt(*x) + " outside [2, 4096]");
    }
    if (auto x = rd.number(*d, "radius", "domain.radius", false)) {
      c.domain.radius = *x;
      if (!(*x > 0.0)) rd.issue("domain.radius", "= " + fmt(*x) + " must be > 0");
    }
  }

  if (const json* g = rd.object(root, "grid", "grid")) {
    rd.unknown(*g, {"v_max", "n_per_axis"}, "grid.");
    if (auto x = rd.number(*g, "v_max", "grid.v_max", false)) {
      c.grid.v_max = *x;
      if (!(*x >= 2.0 && *x <= 20.0)) rd.issue("grid.v_max", "= " + fmt(*x) + " outside [2, 20]");
    }
    if (auto x = rd.integer(*g, "n_per_axis", "grid.n_per_axis")) {
      c.grid.n_per_axis = static_cast<int>(*x);
      if (*x < 4 || *x > 64 || *x % 2)
        rd.issue("grid.n_per_axis", "= " + fmt(*x) + " must be even and in [4, 64]");
    }
  }

  if (const json* w = rd.object(root, "wall", "wall")) {
    rd.unknown(*w, {"profile", "delta", "axis"}, "wall.");
    if (auto s = rd.string(*w, "profile", "wall.profile")) {
      c.wall.profile = *s;
      if (*s != "constant" && *s != "axis_linear" && *s != "harmonic")
        rd.issue("wall.profile", "must be one of constant, axis_linear, harmonic");
    }
    if (auto x = rd.number(*w, "delta", "wall.delta", true)) {
      c.wall.delta = *x;
      if (!(*x >= 0.0 && *x < 1.0)) rd.issue("wall.delta", "= " + fmt(*x) + " outside [0, 1)");
    }
    if (auto x = rd.integer(*w, "axis", "wall.axis")) {
      c.wall.axis = static_cast<int>(*x);
      if (*x < 0 || *x > 2) rd.issue("wall.axis", "must be 0, 1 or 2");
    }
  } else {
    rd.issue("wall", "is required (wall.delta has no default)");
  }

  if (const json* s = rd.object(root, "steady", "steady")) {
    rd.unknown(*s,
               {"epsilon", "n_restitution", "lambda_schedule", "inner_tol", "outer_tol",
                "max_iters", "restart", "max_outer", "probe_stages", "gain_samples"},
               "steady.");
    SteadyConfig& sc = c.steady;
    if (auto v = rd.numbers(*s, "epsilon", "steady.epsilon")) sc.epsilon = *v;
    if (auto v = rd.integer(*s, "n_restitution", "steady.n_restitution"))
      sc.n_restitution = static_cast<int>(*v);
    if (auto v = rd.numbers(*s, "lambda_schedule", "steady.lambda_schedule"))
      sc.lambda_schedule = *v;
    if (auto v = rd.number(*s, "inner_tol", "steady.inner_tol", false)) sc.inner_tol = *v;
    if (auto v = rd.number(*s, "outer_tol", "steady.outer_tol", false)) sc.outer_tol = *v;
    if (auto v = rd.integer(*s, "max_iters", "steady.max_iters")) sc.max_iters = static_cast<int>(*v);
    if (auto v = rd.integer(*s, "restart", "steady.restart")) sc.restart = static_cast<int>(*v);
    if (auto v = rd.integer(*s, "max_outer", "steady.max_outer")) sc.max_outer = static_cast<int>(*v);
    if (auto v = rd.boolean(*s, "probe_stages", "steady.probe_stages")) sc.probe_stages = *v;
    if (auto v = rd.integer(*s, "gain_samples", "steady.gain_samples"))
      sc.gain_samples = static_cast<int>(*v);
  }
  try {
    c.steady.validate();
  } catch (const ParameterError& e) {
    rd.issue("steady", e.what());
  }

  if (const json* t = rd.object(root, "transient", "transient")) {
    rd.unknown(*t,
               {"dt", "T", "record_every", "p", "periodic", "closure", "collision_K",
                "blowup_factor"},
               "transient.");
    TransientConfig& tc = c.transient;
    if (auto v = rd.number(*t, "dt", "transient.dt", false)) tc.dt = *v;
    if (auto v = rd.number(*t, "T", "transient.T", false)) tc.T = *v;
    if (auto v = rd.integer(*t, "record_every", "transient.record_every"))
      tc.record_every = static_cast<int>(*v);
    if (auto v = rd.number(*t, "p", "transient.p", false)) tc.p = *v;
    if (auto v = rd.boolean(*t, "periodic", "transient.periodic")) tc.periodic = *v;
    if (auto v = rd.string(*t, "closure", "transient.closure")) {
      if (*v == "same_step")
        tc.closure = BoundaryClosure::SameStep;
      else if (*v == "lagged")
        tc.closure = BoundaryClosure::Lagged;
      else
        rd.issue("transient.closure", "must be \"same_step\" or \"lagged\"");
    }
    if (auto v = rd.boolean(*t, "collision_K", "transient.collision_K")) tc.collision_K = *v;
    if (auto v = rd.number(*t, "blowup_factor", "transient.blowup_factor", false))
      tc.blowup_factor = *v;
  }
  try {
    c.transient.validate();
  } catch (const ParameterError& e) {
    rd.issue("transient", e.what());
  }

  if (const json* p = rd.object(root, "params", "params")) {
    c.params = *p;
    if (info) {
      std::set<std::string> known(info->params.begin(), info->params.end());
      rd.unknown(*p, known, "params.");
    }
  }

  c.steady.weight = c.weight;
  c.steady.grazing = 1e-3;
  c.transient.weight = c.weight;
  res.config = std::move(c);
  return res;
}

ConfigResult validate_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) {
    ConfigResult r;
    r.issues.push_back({"<file>", "cannot read " + path});
    return r;
  }
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

RunConfig load_config(const std::string& path) {
  ConfigResult r = validate_config(path);
  if (!r.ok()) throw ConfigError(r.issues);
  return *r.config;
}

}  // namespace kinlab
