#pragma once

// Experiment runner: JSON config -> validated plan -> CSV tables + manifest.
//
// Config layout:
//   { "experiment": "<name>", "seed": <u64>, "output_dir": "<path>",
//     "parameters": { flat map of numbers, strings, booleans and lists } }
// Unknown keys at either level are rejected.

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace zenosim::experiment {

struct ExperimentConfig {
  std::string experiment;
  nlohmann::json parameters = nlohmann::json::object();
  std::uint64_t seed = 0;
  std::string output_dir = "out";

  nlohmann::json to_json() const;
};

// Throws ValidationError on malformed JSON shape or unknown top-level keys.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

struct ExperimentInfo {
  std::string name;
  std::string summary;
  std::vector<std::string> outputs;
};
const std::vector<ExperimentInfo>& experiments();

// Every module precondition, checked without computing. Empty means valid.
std::vector<std::string> validate(const ExperimentConfig& cfg);

struct Table {
  std::string file;  // e.g. "scaling.csv"
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

// Throws ValidationError (when validate() is non-empty) or a NumericalError.
std::vector<Table> execute(const ExperimentConfig& cfg);

// Shortest decimal that round-trips to the same double; nan and inf spelled out.
std::string format_double(double x);
std::string to_csv(const Table& t);

// 64-bit FNV-1a of the bytes, as 16 hex digits.
std::string checksum(const std::string& bytes);

struct RunOptions {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output_dir;
  int workers = 1;
};

enum ExitCode : int { kSuccess = 0, kInternalError = 1, kValidationError = 2, kNumericalFailure = 3 };

// Loads, validates, runs and writes <output_dir>/<table files> plus manifest.json.
// Files written by a failed run are removed. Diagnostics go to standard error.
int run(const std::filesystem::path& config_path, const RunOptions& opts);

}  // namespace zenosim::experiment
