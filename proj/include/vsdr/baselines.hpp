#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "vsdr/policy_net.hpp"
#include "vsdr/testbed.hpp"

namespace vsdr {

struct Critic {
  std::string policy_id;
  std::vector<LayerSpec> layers;  // (obs, action) -> scalar
  double fit_loss = 0.0;
};

struct LabeledTransitionSet {
  Eigen::MatrixXd obs;      // T x kObsDim
  Eigen::MatrixXd actions;  // T x kActionDim
  std::vector<int> labels;  // 1 = transition from a successful episode
  std::vector<std::string> episode_ids;

  int size() const { return static_cast<int>(labels.size()); }
  void validate() const;
};

struct CriticFitConfig {
  int population = 32;
  int elites = 6;
  int iterations = 30;
  double sigma_init = 0.5;
  double sigma_floor = 0.02;
};

// Least-squares fit of Q(s_t, a_t) onto the undiscounted return-to-go by the
// same weight search the trainer uses.
Critic fit_critic(const MlpPolicy& policy, const std::vector<EpisodeRecord>& rollouts,
                  uint64_t seed, const CriticFitConfig& cfg = {});

double critic_value(const Critic& critic, const Eigen::VectorXd& obs,
                    const Eigen::VectorXd& action);
Eigen::VectorXd critic_values(const Critic& critic, const LabeledTransitionSet& data);

// Max over thresholds b drawn from the Q values of the balanced accuracy
// 0.5 P(Q > b | success) + 0.5 P(Q <= b | failure).
double opc_from_values(const Eigen::VectorXd& q, const std::vector<int>& labels);
double opc(const Critic& critic, const LabeledTransitionSet& data);
// Mean Q over success transitions minus mean Q over all transitions.
double soft_opc_from_values(const Eigen::VectorXd& q, const std::vector<int>& labels);
double soft_opc(const Critic& critic, const LabeledTransitionSet& data);

// Pools every episode's transitions under its episode-level success label.
LabeledTransitionSet build_labeled_set(const std::vector<EpisodeRecord>& episodes,
                                       const std::vector<std::string>& episode_ids = {});

void save_labeled_set(const LabeledTransitionSet& data, const std::filesystem::path& path);
LabeledTransitionSet load_labeled_set(const std::filesystem::path& path);
void save_critic(const Critic& critic, const std::filesystem::path& path);
Critic load_critic(const std::filesystem::path& path);

}  // namespace vsdr
