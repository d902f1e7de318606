// Batch front door: runs one named command from a JSON run configuration and
// writes machine-readable reports. Exit codes: 0 pass, 1 usage error,
// 2 validation/property failure.

#include "dbspace/cli.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"de Branges space toolkit"};
  app.set_version_flag("--version", dbspace::kVersion);

  std::string command;
  std::string config_path;
  std::string output_dir;
  app.add_option("command", command, "one of: validate, kernel-eval, gram, positivity, "
                                     "subspace-kernel, recover-e, spectrum, eigenfunctions, "
                                     "reconstruct, canonical-identity, inner-check, isometry-check")
      ->required();
  app.add_option("-c,--config", config_path, "run configuration (JSON)")->required();
  app.add_option("-o,--output-dir", output_dir, "report directory (overrides config)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (app.exit(e) == 0) return 0;  // --help / --version
    return 1;
  }

  try {
    dbspace::cli::RunConfig cfg = dbspace::cli::load_config(config_path);
    if (!output_dir.empty()) cfg.output_dir = output_dir;
    return dbspace::cli::run(cfg, command);
  } catch (const dbspace::cli::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
