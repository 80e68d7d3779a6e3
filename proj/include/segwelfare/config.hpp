#pragma once

// Run configuration: a versioned JSON document declaring one or more families
// and the knobs every command reads. Defaults live here and are echoed back
// into every report.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "segwelfare/demand.hpp"
#include "segwelfare/tolerances.hpp"

namespace segwelfare {

inline constexpr const char* kConfigSchema = "segwelfare.config/1";
inline constexpr const char* kReportSchema = "segwelfare.report/1";
inline constexpr const char* kVersion = "0.1.0";

struct NamedFamily {
  std::string name;
  std::vector<DemandSpec> types;
};

struct StepLimitSettings {
  std::vector<double> eps = {1.0, 0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1};
  std::array<double, 2> values = {1.0, 1.25};
  double alpha = 0.5;
};

struct RunConfig {
  std::vector<NamedFamily> families;
  std::vector<double> alphas = {0.5};
  std::optional<Eigen::VectorXd> prior;
  std::size_t resolution = 200;
  std::size_t field_resolution = 40;
  std::size_t sobol_points = 4096;
  unsigned threads = 1;
  std::uint64_t seed = 0;
  std::size_t search_trials = 500;
  std::size_t scan_points = 201;
  bool fallback_grid = false;
  bool scale_arrows = false;
  StepLimitSettings step_limit;
  Tolerances tol;
  std::optional<std::filesystem::path> out;
  std::optional<std::filesystem::path> lattice_csv;

  nlohmann::json document;  // as read, before defaults
};

/// Throws Error(ConfigParse) with the line and column of a syntax error, or
/// the path of the offending field. Relative CSV paths resolve against
/// `base_dir`.
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = ".");
RunConfig load_config(const std::filesystem::path& path);

/// Effective settings, defaults included.
nlohmann::json settings_json(const RunConfig& cfg);

/// 64-bit FNV-1a of the effective settings and the document as read, as 16
/// hex digits.
std::string config_hash(const RunConfig& cfg);

}  // namespace segwelfare
