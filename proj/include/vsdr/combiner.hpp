#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <vector>

namespace vsdr {

// (v - min) / (max - min); a constant vector maps to all ones so that it acts
// as a neutral factor in the product.
Eigen::VectorXd minmax_normalize(const Eigen::VectorXd& v);
// Elementwise product of the two min-max-normalized inputs.
Eigen::VectorXd vsdr_scores(const Eigen::VectorXd& s, const Eigen::VectorXd& r);
Eigen::VectorXd combine_generic(const Eigen::VectorXd& s, const Eigen::VectorXd& b);

struct ScoreCell {
  std::string validation_type;  // heavy | mild | off
  std::string metric;           // reward | success | strict_success
  std::string layer;
  int n_components = 0;
  std::string protocol;  // expert | sparse_expert | initial

  std::string key() const;
};

struct ScoreTable {
  ScoreCell cell;
  std::vector<std::string> policy_ids;
  Eigen::VectorXd s, r, s_norm, r_norm, vsdr, opc, soft_opc;

  int rows() const { return static_cast<int>(policy_ids.size()); }
  void validate() const;
};

// Baseline columns may be NaN when no baseline scores exist yet.
ScoreTable make_score_table(const ScoreCell& cell, const std::vector<std::string>& policy_ids,
                            const Eigen::VectorXd& s, const Eigen::VectorXd& r,
                            const Eigen::VectorXd& opc, const Eigen::VectorXd& soft_opc);

void save_score_table(const ScoreTable& table, const std::filesystem::path& path);
ScoreTable load_score_table(const std::filesystem::path& path, const ScoreCell& cell = {});

}  // namespace vsdr
