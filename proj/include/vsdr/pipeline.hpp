#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "vsdr/config.hpp"
#include "vsdr/rank_eval.hpp"

namespace vsdr {

// Artifact layout under the output directory.
struct OutPaths {
  std::filesystem::path root;

  std::filesystem::path domains() const { return root / "domains.json"; }
  std::filesystem::path policies_dir() const { return root / "policies"; }
  std::filesystem::path policy_index() const { return root / "policies" / "index.json"; }
  std::filesystem::path policy_manifest(const std::string& id) const {
    return root / "policies" / (id + ".json");
  }
  std::filesystem::path gt_run(int run) const {
    return root / "gt" / ("run" + std::to_string(run) + ".json");
  }
  std::filesystem::path gt_episodes() const { return root / "gt" / "run1_episodes.jsonl"; }
  std::filesystem::path expert_episodes() const { return root / "expert" / "episodes.jsonl"; }
  std::filesystem::path validation_scores() const { return root / "validation" / "scores.json"; }
  std::filesystem::path acts_file(const std::string& id, const std::string& layer) const {
    return root / "cache" / id / layer / "acts.txt";
  }
  std::filesystem::path gmm_file(const std::string& id, const std::string& layer, int n) const {
    return root / "cache" / id / layer / ("gmm_" + std::to_string(n) + ".json");
  }
  std::filesystem::path ood_scores() const { return root / "ood" / "scores.json"; }
  std::filesystem::path labeled_set() const { return root / "baselines" / "labeled.jsonl"; }
  std::filesystem::path critic_file(const std::string& id) const {
    return root / "baselines" / "critics" / (id + ".json");
  }
  std::filesystem::path baseline_scores() const { return root / "baselines" / "scores.json"; }
  std::filesystem::path score_table(const ScoreCell& cell) const {
    return root / "scores" / (cell.key() + ".csv");
  }
  std::filesystem::path report_dir() const { return root / "report"; }
  std::filesystem::path state_file() const { return root / "state.json"; }
};

// Sweep enumeration shared by the combine and report stages: the main cells at
// the expert protocol plus the protocol-axis cells at the pinned component count.
std::vector<ScoreCell> enumerate_cells(const PipelineConfig& cfg);

void stage_gen_domains(const PipelineConfig& cfg);
void stage_train(const PipelineConfig& cfg);
void stage_gt_eval(const PipelineConfig& cfg);
void stage_expert_data(const PipelineConfig& cfg);
void stage_validate(const PipelineConfig& cfg);
void stage_collect_acts(const PipelineConfig& cfg);
void stage_fit_gmms(const PipelineConfig& cfg);
void stage_ood_scores(const PipelineConfig& cfg);
void stage_baselines(const PipelineConfig& cfg);
void stage_combine(const PipelineConfig& cfg);
void stage_report(const PipelineConfig& cfg);

struct PipelineResult {
  std::filesystem::path out_dir;
  std::vector<ScoreTable> tables;
  RankingReport report;
};

// Runs every stage in order; completed stages with matching fingerprints are
// skipped, so reruns resume and unchanged configs rewrite nothing.
PipelineResult run_pipeline(const PipelineConfig& cfg);

}  // namespace vsdr
