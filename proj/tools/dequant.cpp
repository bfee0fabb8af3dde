#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "dequant/cli/commands.hpp"

namespace cli = dequant::cli;

namespace {

int emit(const cli::CommandResult& result, const std::optional<std::filesystem::path>& out, const char* name) {
  std::cerr << result.diagnostics;
  if (out) cli::write_file(*out / name, cli::dump_json(result.envelope));
  return result.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Variational dequantization toolkit: deformed kinetic functionals and side-by-side dynamics"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  app.add_option("--config", config_path, "Run configuration (INI)")->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "Output directory");

  auto* report = app.add_subcommand("report", "Kinetic report, Fisher identity and minimizer check");
  auto* evolve = app.add_subcommand("evolve", "Propagate the configured state");
  std::string mode = "quantum";
  evolve->add_option("--mode", mode, "quantum | classical | deformed | gap")->required();
  auto* verify = app.add_subcommand("verify", "Randomized invariant suite");
  std::uint64_t seed = 42;
  std::size_t cases = 50;
  verify->add_option("--seed", seed, "Random seed");
  verify->add_option("--cases", cases, "Number of random states")->check(CLI::PositiveNumber);

  // Let --config/--out follow the subcommand as well.
  for (auto* sub : {report, evolve, verify}) {
    sub->add_option("--config", config_path, "Run configuration (INI)")->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "Output directory");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::exit_config;
  }

  const std::optional<std::filesystem::path> out =
      out_dir.empty() ? std::nullopt : std::optional<std::filesystem::path>(out_dir);
  try {
    if (verify->parsed()) {
      const auto result = cli::cmd_verify({seed, cases, false});
      std::cout << result.envelope["report"].get<std::string>();
      if (out) cli::write_file(*out / "verify.json", cli::dump_json(result.envelope));
      return result.exit_code;
    }

    if (config_path.empty()) throw cli::ConfigError("--config", "a configuration file is required");
    const auto config = cli::load_config(config_path);
    if (report->parsed()) {
      const auto result = cli::cmd_report(config);
      std::cout << cli::dump_json(result.envelope);
      return emit(result, out, "report.json");
    }
    const auto result = cli::cmd_evolve(config, cli::parse_mode(mode), out.value_or("out"));
    std::cout << cli::dump_json(result.envelope);
    std::cerr << result.diagnostics;
    return result.exit_code;
  } catch (const cli::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return cli::exit_config;
  } catch (const dequant::ResolutionError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return cli::exit_config;
  } catch (const dequant::NumericalError& e) {
    std::cerr << "numerical failure at step " << e.step() << ": " << e.what() << "\n";
    return cli::exit_numerical;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return cli::exit_config;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return cli::exit_numerical;
  }
}
