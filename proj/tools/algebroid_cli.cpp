// Command-line front end: run / list / check-config.

#include "algebroid/runner.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <iostream>

namespace {

using namespace algebroid;

algebroid::Json prepare(const std::string& path, const std::vector<std::string>& overrides) {
  Json config = loadConfig(path);
  for (const auto& o : overrides) applyOverride(config, o);
  validateConfig(config);
  return config;
}

int runCommand(const std::string& configPath, const std::string& outDir, std::optional<std::uint64_t> seed,
               const std::vector<std::string>& overrides) {
  const auto start = std::chrono::steady_clock::now();
  const RunResult result = runScenario(prepare(configPath, overrides), seed);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  writeArtifacts(result, wall, outDir);
  for (const auto& c : result.report.at("checks"))
    std::cout << (c.at("passed").get<bool>() ? "PASS " : "FAIL ") << c.at("name").get<std::string>()
              << "  max_norm=" << c.at("max_norm").dump() << '\n';
  std::cout << result.report.at("scenario").get<std::string>() << ": "
            << (result.passed ? "all checks passed" : std::to_string(result.report.at("failures").get<int>()) + " failed")
            << '\n';
  return result.passed ? kExitOk : kExitCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fibred Lie algebroid scenario runner"};
  app.require_subcommand(1);

  std::string configPath, outDir;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;

  auto* run = app.add_subcommand("run", "Run a scenario config and write report.json, timing.json and CSVs");
  run->add_option("config", configPath, "Scenario config (JSON)")->required();
  run->add_option("outdir", outDir, "Output directory")->required();
  run->add_option("--seed", seed, "Seed for every randomized field (overrides the config)");
  run->add_option("--override", overrides, "Set a config value: dotted.key=json_value")->take_all();

  auto* list = app.add_subcommand("list", "List scenario kinds, checks and catalogs");

  auto* check = app.add_subcommand("check-config", "Validate a config without running it");
  check->add_option("config", configPath, "Scenario config (JSON)")->required();
  check->add_option("--override", overrides, "Set a config value: dotted.key=json_value")->take_all();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*list) {
      std::cout << scenarioCatalog();
      return kExitOk;
    }
    if (*check) {
      prepare(configPath, overrides);
      std::cout << configPath << ": ok\n";
      return kExitOk;
    }
    return runCommand(configPath, outDir, seed, overrides);
  } catch (const UnknownScenario& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUnknownKind;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitSchema;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  }
}
