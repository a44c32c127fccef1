#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "vsdr/combiner.hpp"
#include "vsdr/policy_net.hpp"
#include "vsdr/sim_validation.hpp"
#include "vsdr/testbed.hpp"

namespace vsdr {

// Descending average ranks: the largest score gets rank 1; ties share the mean
// of their positional ranks.
Eigen::VectorXd rank_with_ties(const Eigen::VectorXd& scores);
// Pearson correlation of the tie-averaged rank vectors; nullopt when either
// vector is constant (never a silent zero).
std::optional<double> spearman(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

struct GroundTruth {
  int run_id = 0;
  std::vector<std::string> policy_ids;
  Eigen::VectorXd reward, success, strict;

  const Eigen::VectorXd& metric(Metric m) const;
  void validate() const;
};

GroundTruth ground_truth_eval(const std::vector<MlpPolicy>& policies, const DomainParams& real,
                              int grid_n, int run_id, uint64_t seed,
                              std::vector<EpisodeRecord>* episodes_out = nullptr,
                              std::vector<std::string>* episode_ids_out = nullptr);

void save_ground_truth(const GroundTruth& gt, const std::filesystem::path& path);
GroundTruth load_ground_truth(const std::filesystem::path& path);

struct BoxSummary {
  double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
  int count = 0;
};
BoxSummary box_summary(std::vector<double> values);

inline const std::vector<std::string> kMethods = {"sim_only", "ood_only", "vsdr",   "opc",
                                                  "soft_opc", "sim_opc",  "sim_soft_opc"};

struct CellResult {
  ScoreCell cell;
  std::map<std::string, std::optional<double>> rho;
};

struct SubsetSummary {
  std::string name;
  int n_policies = 0;
  std::optional<BoxSummary> box;
};

struct RankingReport {
  std::vector<CellResult> cells;
  // NaN marks an undefined aggregate (degenerate correlation inputs).
  std::map<std::string, double> aggregates;
  std::vector<std::pair<std::string, BoxSummary>> boxes;
};

CellResult eval_cell(const ScoreTable& table, const GroundTruth& gt);
// Aggregates and box groups cover the expert-protocol cells; every cell row is
// reported. gt2 supplies the run-to-run ranking ceiling.
RankingReport sweep_report(const std::vector<ScoreTable>& tables, const GroundTruth& gt,
                           const GroundTruth& gt2);

std::vector<std::pair<std::string, BoxSummary>> protocol_comparison(
    const std::vector<ScoreTable>& tables, const GroundTruth& gt, int fixed_n);

std::optional<double> vsdr_rho_on_subset(const ScoreTable& table, const GroundTruth& gt,
                                         const std::vector<std::string>& keep_ids);
std::vector<SubsetSummary> separability_analysis(
    const std::vector<ScoreTable>& expert_tables, const GroundTruth& gt,
    const std::vector<std::pair<std::string, std::vector<std::string>>>& subsets);

}  // namespace vsdr
