#pragma once

// The command-line subcommands as plain functions, so tests can drive them
// without a process boundary. Exit codes: 0 ok, 1 domain failure, 2 usage.

#include <string>

#include <json.hpp>

#include "segwelfare/config.hpp"

namespace segwelfare {

struct CommandOutput {
  int exit_code = 0;
  nlohmann::json report;
  std::string csv;  // cmd_field only
};

struct ClassifyOptions {
  bool alpha_scan = false;
  bool affine = false;
};

CommandOutput cmd_validate(const RunConfig& cfg);
CommandOutput cmd_classify(const RunConfig& cfg, const ClassifyOptions& opt = {});
/// Writes the lattice CSV when cfg.lattice_csv is set.
CommandOutput cmd_bounds(const RunConfig& cfg);
/// Uses the first family and the first alpha.
CommandOutput cmd_field(const RunConfig& cfg);
CommandOutput cmd_witness(const RunConfig& cfg);
CommandOutput cmd_step_limit(const RunConfig& cfg);

/// Header shared by every report: schema, command, version, config hash and
/// effective settings.
nlohmann::json report_header(const RunConfig& cfg, const std::string& command);

}  // namespace segwelfare
