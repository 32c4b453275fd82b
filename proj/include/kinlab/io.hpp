#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace kinlab {

struct RunConfig;

constexpr const char* kVersion = "0.1.0";

void write_json(const std::string& path, const nlohmann::json& j);

// Plain CSV with a header row; values printed with 17 significant digits.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

// Library, compiler and Eigen versions.
nlohmann::json build_info();

// config echo (verbatim text and parsed), seed, grid hash, versions, wall clock.
void write_manifest(const std::string& dir, const RunConfig& cfg, const nlohmann::json& extra,
                    double wall_seconds);

// Creates dir (and parents); returns it.
std::string ensure_dir(const std::string& dir);

}  // namespace kinlab
