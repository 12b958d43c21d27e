#pragma once

// Scenario runner behind the command-line tool: config parsing and
// validation, check evaluation, and the report/CSV artifacts.

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace algebroid {

using Json = nlohmann::ordered_json;

inline constexpr int kConfigSchema = 1;

enum ExitCode : int {
  kExitOk = 0,
  kExitCheckFailed = 1,
  kExitUsage = 2,
  kExitSchema = 3,
  kExitUnknownKind = 4,
  kExitIo = 5,
  kExitNumerical = 6,
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class UnknownScenario : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Reads and parses a config file (IoError, ConfigError on bad JSON).
Json loadConfig(const std::filesystem::path& path);

/// Sets a dotted key path to a value parsed as JSON, or as a string when it
/// does not parse: "dt=5e-4", "checks.energy_drift.tol=0", "inertia=[1,2,3]".
void applyOverride(Json& config, const std::string& assignment);

/// Throws ConfigError on schema violations and UnknownScenario on an unknown kind.
void validateConfig(const Json& config);

struct CsvTable {
  std::string name;  ///< file name inside the output directory
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

struct RunResult {
  Json report;  ///< deterministic: no timestamps or timings
  std::vector<CsvTable> tables;
  bool passed = false;
};

/// Runs a validated config. The seed drives every randomized field.
RunResult runScenario(const Json& config, std::optional<std::uint64_t> seed = std::nullopt);

/// Writes report.json, timing.json and the CSV tables (IoError on failure).
void writeArtifacts(const RunResult& result, double wallSeconds, const std::filesystem::path& outDir);

void writeCsv(std::ostream& os, const CsvTable& table);

/// Scenario kinds, their parameters and checks, and the Lagrangian and gauge catalogs.
std::string scenarioCatalog();

/// Names of the scenario kinds.
std::vector<std::string> scenarioKinds();

}  // namespace algebroid
