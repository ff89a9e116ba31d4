#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "config.hpp"
#include "crgate/errors.hpp"

namespace {

struct Args {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> restarts;
  std::optional<int> threads;
  bool dry_run = false;
};

void add_common(CLI::App* cmd, Args& a) {
  cmd->add_option("--config", a.config, "JSON run configuration")->required();
  cmd->add_option("--seed", a.seed, "Base seed (overrides the config)");
  cmd->add_option("--out", a.out, "Output directory (overrides the config)");
  cmd->add_option("--restarts", a.restarts, "Number of restarts")->check(CLI::PositiveNumber);
  cmd->add_option("--threads", a.threads, "Worker threads")->check(CLI::PositiveNumber);
  cmd->add_flag("--dry-run", a.dry_run, "Validate the config and exit");
}

crgate::cli::RunConfig load(const Args& a) {
  std::ifstream in(a.config, std::ios::binary);
  if (!in) throw crgate::Error("cannot open config '" + a.config + "'");
  std::ostringstream text;
  text << in.rdbuf();
  crgate::cli::Overrides o{a.seed, a.restarts, a.threads, a.out};
  const auto base = std::filesystem::absolute(a.config).parent_path();
  return crgate::cli::parse_config(text.str(), o, base.string());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal control of cross-resonance CNOT gates"};
  app.require_subcommand(1);
  Args args;
  auto* optimize = app.add_subcommand("optimize", "Optimize a pulse");
  auto* sweep = app.add_subcommand("sweep", "Run a qsl, miscalibration, dissipation or leakage sweep");
  add_common(optimize, args);
  add_common(sweep, args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return crgate::cli::kError;
  }

  try {
    const auto cfg = load(args);
    if (args.dry_run) {
      std::cout << "config ok\n";
      return crgate::cli::kSuccess;
    }
    return optimize->parsed() ? crgate::cli::cmd_optimize(cfg, std::cout)
                              : crgate::cli::cmd_sweep(cfg, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return crgate::cli::kError;
  }
}
