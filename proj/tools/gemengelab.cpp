// Batch front door: run scenario files or built-in presets and emit JSON
// reports. Exit codes: 0 all checks pass, 1 check failure, 2 usage or
// parse error.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "gemengelab/gemengelab.hpp"

namespace {

using namespace gemengelab;

void apply_tol_overrides(Tolerances& tol, const std::vector<std::string>& entries) {
  for (const std::string& entry : entries) {
    const std::size_t eq = entry.find('=');
    if (eq == std::string::npos)
      throw ParseError(0, "--tol expects KEY=VAL, got '" + entry + "'");
    const std::string key = entry.substr(0, eq);
    const double value = std::stod(entry.substr(eq + 1));
    if (key == "norm") tol.norm = value;
    else if (key == "herm") tol.herm = value;
    else if (key == "orth") tol.orth = value;
    else if (key == "eq") tol.eq = value;
    else if (key == "pos") tol.pos = value;
    else if (key == "var") tol.var = value;
    else if (key == "rec") tol.rec = value;
    else throw ParseError(0, "unknown tolerance key '" + key + "'");
  }
}

int emit(const scenario::Report& report, const std::string& out_path) {
  const std::string text = report.dump(2);
  if (out_path.empty()) {
    std::cout << text << "\n";
  } else {
    std::ofstream out(out_path);
    if (!out) {
      std::cerr << "error: cannot write " << out_path << "\n";
      return 2;
    }
    out << text << "\n";
  }
  return report.all_passed ? 0 : 1;
}

int run_config(scenario::ScenarioConfig cfg, const std::vector<std::string>& tol_entries,
               bool seed_given, std::uint64_t seed, const std::string& out_path) {
  if (const char* env = std::getenv("GEMENGELAB_TOL_EQ")) cfg.tol.eq = std::stod(env);
  apply_tol_overrides(cfg.tol, tol_entries);
  if (seed_given) cfg.seed = seed;
  global_tolerances() = cfg.tol;
  return emit(scenario::run_scenario(cfg), out_path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gemengelab: premeasurement couplings, gemenge states and"
               " detector objectification on finite-dimensional spaces"};
  app.require_subcommand(0, 1);
  app.fallthrough();  // --seed/--tol may follow the subcommand

  bool list_presets = false;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::vector<std::string> tol_entries;
  app.add_flag("--list-presets", list_presets, "List built-in presets and exit");
  auto* seed_opt = app.add_option("--seed", seed, "Override the scenario seed");
  app.add_option("--tol", tol_entries, "Override a tolerance, KEY=VAL (eq, norm, orth, ...)");

  std::string run_file, run_out;
  CLI::App* run_cmd = app.add_subcommand("run", "Run a scenario file");
  run_cmd->add_option("file", run_file, "Scenario file (.scn)")->required();
  run_cmd->add_option("--out", run_out, "Write the JSON report to a file");

  std::string preset_name, preset_out;
  CLI::App* preset_cmd = app.add_subcommand("preset", "Run a built-in preset");
  preset_cmd->add_option("name", preset_name, "Preset name")->required();
  preset_cmd->add_option("--out", preset_out, "Write the JSON report to a file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (list_presets) {
      for (const std::string& name : gemengelab::scenario::preset_names())
        std::cout << name << "\n";
      return 0;
    }
    seed_given = seed_opt->count() > 0;
    if (run_cmd->parsed()) {
      return run_config(gemengelab::scenario::load_scenario_file(run_file), tol_entries,
                        seed_given, seed, run_out);
    }
    if (preset_cmd->parsed()) {
      return run_config(gemengelab::scenario::preset(preset_name), tol_entries, seed_given, seed,
                        preset_out);
    }
    std::cerr << app.help();
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
