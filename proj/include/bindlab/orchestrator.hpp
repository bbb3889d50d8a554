#pragma once

// Command-line pipelines: configuration schema and validation, execution,
// and the report / CSV / basis artifacts of each run.

#include <string>
#include <vector>

#include <stdexcept>

#include <json.hpp>

namespace bindlab {

using Json = nlohmann::ordered_json;

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitNonConvergence = 3,
  kExitVerification = 4,
};

// Configuration problems found before any solve.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string command;
  Json params = Json::object();  // fully defaulted and validated
  std::vector<long long> seeds;
  std::string output_dir = "bindlab_out";
  std::string basis_file;  // optional warm-start basis
};

const std::vector<std::string>& command_names();

// JSON Schema (draft-07) of the config file, generated from the parameter
// tables.
Json config_schema();

// Rejects unknown keys, wrong types and unknown commands; fills defaults.
RunConfig parse_config(const Json& doc);

struct RunOutcome {
  int exit_code = kExitOk;
  Json report;
  std::string csv;  // empty for commands without scan points
};

// Runs a validated config and writes report.json (and scan.csv, basis.txt
// when produced) into cfg.output_dir.
RunOutcome run(const RunConfig& cfg);

// Full CLI: subcommands, flags, --config file, exit codes.
int cli_main(int argc, char** argv);

// Flat CSV of scan points, as written to scan.csv.
std::string scan_csv_header();

}  // namespace bindlab
