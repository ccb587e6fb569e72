// judgeprobe command line: drives the full audit lifecycle from a
// declarative run config. Subcommands: run, score, simulate, report.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "judgeprobe/judgeprobe.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  bool frozen_time = false;
  std::vector<std::string> families;
  std::vector<std::string> judges;
  bool print_effective_config = false;
};

void add_common_options(CLI::App* cmd, CommonArgs& args, bool config_required = true) {
  auto* opt = cmd->add_option("--config", args.config_path, "run config JSON file");
  if (config_required) opt->required();
  cmd->add_option("--out", args.out_dir, "output directory (overrides config)");
  cmd->add_option("--seed", args.seed, "run seed (overrides config)");
  cmd->add_flag("--frozen-time", args.frozen_time,
                "freeze timestamps for byte-reproducible outputs");
  cmd->add_option("--families", args.families, "cue families to run (overrides config)")
      ->delimiter(',');
  cmd->add_option("--judges", args.judges, "judge ids to keep (filters config)")
      ->delimiter(',');
  cmd->add_flag("--print-effective-config", args.print_effective_config,
                "dump the effective config (with defaults applied) and continue");
}

judgeprobe::RunConfig load_effective_config(const CommonArgs& args) {
  judgeprobe::RunConfig cfg = judgeprobe::load_run_config(args.config_path);
  if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
  if (args.seed) cfg.seed = *args.seed;
  if (args.frozen_time) cfg.frozen_time = true;
  if (!args.families.empty()) {
    cfg.families.clear();
    for (const auto& f : args.families) cfg.families.push_back(judgeprobe::parse_family(f));
  }
  if (!args.judges.empty()) {
    std::vector<judgeprobe::JudgeConfig> kept;
    for (const auto& j : cfg.judges) {
      for (const auto& wanted : args.judges) {
        if (j.judge_id == wanted) {
          kept.push_back(j);
          break;
        }
      }
    }
    cfg.judges = std::move(kept);
  }
  if (args.print_effective_config) {
    std::cout << judgeprobe::run_config_to_json(cfg).dump(2) << "\n";
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"judgeprobe: cue-perturbation audit harness for pairwise LLM judges"};
  app.require_subcommand(1);

  CommonArgs run_args;
  auto* run_cmd = app.add_subcommand("run", "execute a full audit from a run config");
  add_common_options(run_cmd, run_args);

  CommonArgs score_args;
  std::string records_path;
  auto* score_cmd =
      app.add_subcommand("score", "recompute metrics from persisted trial records");
  score_cmd->add_option("--records", records_path, "trials.jsonl from a previous run")
      ->required();
  add_common_options(score_cmd, score_args);

  CommonArgs sim_args;
  std::string params_path;
  auto* sim_cmd = app.add_subcommand(
      "simulate", "run the pipeline against the simulated judge and print expectations");
  sim_cmd->add_option("--params", params_path, "simulated-judge params JSON file")->required();
  add_common_options(sim_cmd, sim_args);

  std::string report_path;
  std::string report_format = "markdown";
  std::string report_out;
  auto* report_cmd = app.add_subcommand("report", "emit tables from a stored report.json");
  report_cmd->add_option("--report", report_path, "path to report.json")->required();
  report_cmd->add_option("--format", report_format, "markdown | csv | json");
  report_cmd->add_option("--out", report_out, "write table files here instead of stdout");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) {
      return judgeprobe::cmd_run(load_effective_config(run_args), std::cout, std::cerr);
    }
    if (score_cmd->parsed()) {
      return judgeprobe::cmd_score(records_path, load_effective_config(score_args), std::cout,
                                   std::cerr);
    }
    if (sim_cmd->parsed()) {
      return judgeprobe::cmd_simulate(params_path, load_effective_config(sim_args), std::cout,
                                      std::cerr);
    }
    if (report_cmd->parsed()) {
      std::optional<std::filesystem::path> out;
      if (!report_out.empty()) out = report_out;
      return judgeprobe::cmd_report(report_path, judgeprobe::parse_table_format(report_format),
                                    out, std::cout, std::cerr);
    }
  } catch (const judgeprobe::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
