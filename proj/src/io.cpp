#include "kinlab/io.hpp"

#include <Eigen/Core>
#include <filesystem>
#include <fstream>
#include <iomanip>

#include "kinlab/common.hpp"
#include "kinlab/config.hpp"
#include "kinlab/velocity.hpp"

namespace kinlab {

std::string ensure_dir(const std::string& dir) {
  std::filesystem::create_directories(dir);
  return dir;
}

void write_json(const std::string& path, const nlohmann::json& j) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path);
  os << j.dump(2) << "\n";
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open " + path);
  for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
  os << "\n" << std::setprecision(17);
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
    os << "\n";
  }
}

nlohmann::json build_info() {
  nlohmann::json j;
  j["kinlab"] = kVersion;
  j["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
               "." + std::to_string(EIGEN_MINOR_VERSION);
#if defined(__clang__)
  j["compiler"] = std::string("clang ") + __clang_version__;
#elif defined(__GNUC__)
  j["compiler"] = "gcc " + std::to_string(__GNUC__) + "." + std::to_string(__GNUC_MINOR__) + "." +
                  std::to_string(__GNUC_PATCHLEVEL__);
#endif
  j["cxx_standard"] = static_cast<long>(__cplusplus);
  return j;
}

void write_manifest(const std::string& dir, const RunConfig& cfg, const nlohmann::json& extra,
                    double wall_seconds) {
  ensure_dir(dir);
  {
    // exact config that produced the artifacts
    std::ofstream os(std::filesystem::path(dir) / "config.json");
    if (!os) throw Error("cannot write config echo in " + dir);
    os << cfg.text;
  }
  nlohmann::json m;
  m["experiment"] = cfg.experiment;
  m["seed"] = cfg.seed;
  m["config_text"] = cfg.text;
  const VelocityGrid grid = VelocityGrid::make(cfg.grid.v_max, cfg.grid.n_per_axis);
  m["grid_hash"] = grid.hash();
  m["grid"] = {{"v_max", cfg.grid.v_max}, {"n_per_axis", cfg.grid.n_per_axis}};
  m["physics"] = {{"kappa", cfg.kappa},
                  {"b0", cfg.b0},
                  {"beta", cfg.weight.beta},
                  {"varpi", cfg.weight.varpi},
                  {"zeta", cfg.weight.zeta},
                  {"delta", cfg.wall.delta}};
  m["versions"] = build_info();
  m["wall_clock_seconds"] = wall_seconds;
  m["artifacts"] = extra;
  write_json((std::filesystem::path(dir) / "manifest.json").string(), m);
}

}  // namespace kinlab
