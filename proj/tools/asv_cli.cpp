#include "asv/harness.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Autonomous-ship collision avoidance: training, validation, reporting"};
  app.require_subcommand(1);

  asv::harness::TrainArgs train_args;
  auto* train = app.add_subcommand("train", "Run a training session");
  train->add_option("--config", train_args.config_path, "training config file")->required();
  train->add_option("--out", train_args.out_dir, "output directory")->required();
  train->add_option("--seed", train_args.seed, "RNG seed (default 0)");

  asv::harness::ValidateArgs val_args;
  auto* validate = app.add_subcommand("validate", "Roll out a policy on a scenario suite");
  validate->add_option("--suite", val_args.suite, "atc | imazu | star4 | star8 | custom")
      ->required();
  validate->add_option("--policy", val_args.policy, "drl | apf | vo | noop")->required();
  validate->add_option("--checkpoint", val_args.checkpoint_path, "network checkpoint (drl)");
  validate->add_option("--apf-config", val_args.apf_config_path, "APF planner config");
  validate->add_option("--vo-config", val_args.vo_config_path, "VO planner config");
  validate->add_option("--coef", val_args.coef_path,
                       "hydrodynamic coefficient file (default data/kvlcc2.coef)");
  validate->add_option("--env-config", val_args.env_config_path, "environment config");
  validate->add_option("--scenario", val_args.scenario_path, "scenario file (custom suite)");
  validate->add_option("--out", val_args.out_dir, "output directory")->required();
  validate->add_flag("--svg", val_args.svg, "also emit trajectory plots");

  std::vector<std::string> report_dirs;
  auto* report = app.add_subcommand("report", "Aggregate validated runs into a table");
  report->add_option("dirs", report_dirs, "validated run directories")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (train->parsed()) return asv::harness::cmd_train(train_args, std::cerr);
  if (validate->parsed()) return asv::harness::cmd_validate(val_args, std::cerr);
  return asv::harness::cmd_report(report_dirs, std::cout, std::cerr);
}
