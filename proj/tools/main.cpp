// gridres: batch studies of cyber-physical grid resilience on MATPOWER-style
// cases. Subcommands: run (full study), validate (parse and check inputs),
// topology (cyber layer only).

#include <string>

#include <CLI11.hpp>

#include "gridres/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Cyber-physical grid resilience studies"};
  app.require_subcommand(1);

  std::string case_path, scenario_path, out_dir = "out", mode_name = "both";
  int verbosity = 0;

  auto* run = app.add_subcommand("run", "solve a baseline/attack study and write result tables");
  run->add_option("--case", case_path, "MATPOWER case file")->required();
  run->add_option("--scenario", scenario_path, "scenario file")->required();
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--mode", mode_name, "baseline | attack | both")
      ->check(CLI::IsMember({"baseline", "attack", "both"}));
  run->add_flag("-v,--verbose", verbosity, "print progress and warnings");

  auto* validate = app.add_subcommand("validate", "parse, validate and summarize the inputs");
  validate->add_option("--case", case_path, "MATPOWER case file")->required();
  validate->add_option("--scenario", scenario_path, "scenario file")->required();

  auto* topology = app.add_subcommand("topology", "solve the pre-attack cyber topology only");
  topology->add_option("--case", case_path, "MATPOWER case file")->required();
  topology->add_option("--scenario", scenario_path, "scenario file")->required();
  topology->add_option("--out", out_dir, "output directory");

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) {
    gridres::RunConfig config;
    config.case_path = case_path;
    config.scenario_path = scenario_path;
    config.output_dir = out_dir;
    config.verbosity = verbosity;
    if (mode_name == "baseline") config.mode = gridres::RunMode::Baseline;
    if (mode_name == "attack") config.mode = gridres::RunMode::Attack;
    if (mode_name == "both") config.mode = gridres::RunMode::Both;
    return gridres::cmd_run(config);
  }
  if (validate->parsed()) return gridres::cmd_validate(case_path, scenario_path);
  if (topology->parsed()) return gridres::cmd_topology(case_path, scenario_path, out_dir);
  return 1;
}
