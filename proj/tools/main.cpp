// zenosim command-line runner: run | validate | list.

#include "zenosim/error.hpp"
#include "zenosim/experiment.hpp"
#include "zenosim/parallel.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace ex = zenosim::experiment;

int main(int argc, char** argv) {
  CLI::App app{"zenosim: noise-assisted quantum metrology experiments"};
  app.set_version_flag("--version", std::string(ZENOSIM_VERSION));
  app.require_subcommand(1);
  app.fallthrough();

  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> output_dir;
  app.add_option("--seed", seed, "Master seed (overrides the config)");
  app.add_option("--workers", workers, "Worker threads (default: ZENOSIM_WORKERS, else hardware)");
  app.add_option("--output-dir", output_dir, "Output directory (overrides the config)");

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run an experiment config");
  run->add_option("config", config_path, "Config JSON")->required();
  auto* validate = app.add_subcommand("validate", "Check a config without computing");
  validate->add_option("config", config_path, "Config JSON")->required();
  auto* list = app.add_subcommand("list", "List available experiments");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : ex::kValidationError;
  }

  if (list->parsed()) {
    for (const auto& e : ex::experiments()) {
      std::cout << e.name << "\t" << e.summary << "\n  outputs:";
      for (const auto& o : e.outputs) std::cout << ' ' << o;
      std::cout << '\n';
    }
    return ex::kSuccess;
  }

  if (validate->parsed()) {
    try {
      auto cfg = ex::load_config(config_path);
      if (seed) cfg.seed = *seed;
      if (output_dir) cfg.output_dir = *output_dir;
      const auto errors = ex::validate(cfg);
      for (const auto& e : errors) std::cout << "error: " << e << '\n';
      if (errors.empty()) std::cout << "ok: " << cfg.experiment << '\n';
      return errors.empty() ? ex::kSuccess : ex::kValidationError;
    } catch (const zenosim::ValidationError& e) {
      std::cout << "error: " << e.what() << '\n';
      return ex::kValidationError;
    }
  }

  ex::RunOptions opts;
  opts.seed = seed;
  opts.output_dir = output_dir;
  try {
    opts.workers = zenosim::resolve_workers(workers);
  } catch (const zenosim::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return ex::kValidationError;
  }
  return ex::run(config_path, opts);
}
