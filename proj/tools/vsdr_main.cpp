#include <CLI11.hpp>
#include <cstdint>
#include <iostream>
#include <map>
#include <string>

#include "vsdr/config.hpp"
#include "vsdr/pipeline.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  uint64_t seed = 0;
};

void add_common(CLI::App* sub, CommonArgs* args) {
  sub->add_option("--config", args->config_path, "config file (ini)")
      ->check(CLI::ExistingFile);
  sub->add_option("--out", args->out_dir, "output directory");
  sub->add_option("--seed", args->seed, "master seed");
}

vsdr::PipelineConfig build_config(CLI::App* sub, const CommonArgs& args,
                                  const std::string& preset) {
  vsdr::PipelineConfig cfg = vsdr::preset_config(preset);
  if (sub->count("--config")) vsdr::apply_config_file(cfg, args.config_path);
  if (sub->count("--seed")) cfg.master_seed = args.seed;
  if (sub->count("--out")) cfg.out_dir = args.out_dir;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rank sim-trained policies by fused validation and familiarity scores"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string preset = "paper-analog";
  int jobs = 1;

  struct StageCmd {
    const char* name;
    const char* help;
    void (*fn)(const vsdr::PipelineConfig&);
  };
  const StageCmd stages[] = {
      {"gen-domains", "sample the train/validation/real domain sets", &vsdr::stage_gen_domains},
      {"train", "train the policy population", &vsdr::stage_train},
      {"gt-eval", "evaluate every policy on the real domain (two runs)", &vsdr::stage_gt_eval},
      {"expert-data", "collect scripted-expert episodes on the real domain",
       &vsdr::stage_expert_data},
      {"validate", "score policies on held-out validation domains", &vsdr::stage_validate},
      {"collect-acts", "record per-layer activations under each policy's training distribution",
       &vsdr::stage_collect_acts},
      {"fit-gmm", "fit mixture models on recorded activations", &vsdr::stage_fit_gmms},
      {"ood-score", "score real-domain activations under the fitted mixtures",
       &vsdr::stage_ood_scores},
      {"baselines", "fit per-policy critics and compute classifier baselines",
       &vsdr::stage_baselines},
      {"combine", "emit per-cell score tables", &vsdr::stage_combine},
      {"report", "emit ranking and aggregate reports", &vsdr::stage_report},
  };

  std::map<std::string, CLI::App*> subs;
  for (const auto& stage : stages) {
    CLI::App* sub = app.add_subcommand(stage.name, stage.help);
    add_common(sub, &args);
    subs[stage.name] = sub;
  }

  CLI::App* pipe = app.add_subcommand("pipeline", "run every stage in order with resume");
  add_common(pipe, &args);
  pipe->add_option("--preset", preset, "smoke | paper-analog | full");
  pipe->add_option("--jobs", jobs, "worker threads for the heavy stages");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (pipe->parsed()) {
      vsdr::PipelineConfig cfg = build_config(pipe, args, preset);
      if (pipe->count("--jobs")) cfg.jobs = jobs;
      cfg.validate();
      vsdr::PipelineResult result = vsdr::run_pipeline(cfg);
      std::cout << "wrote " << result.tables.size() << " score tables under "
                << result.out_dir.string() << "\n";
      return 0;
    }
    for (const auto& stage : stages) {
      CLI::App* sub = subs.at(stage.name);
      if (!sub->parsed()) continue;
      vsdr::PipelineConfig cfg = build_config(sub, args, "paper-analog");
      stage.fn(cfg);
      std::cout << stage.name << ": ok\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::cerr << "error: no subcommand\n";
  return 1;
}
