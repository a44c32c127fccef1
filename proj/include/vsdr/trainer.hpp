#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vsdr/rollout.hpp"

namespace vsdr {

struct TrainerConfig {
  std::string policy_id;
  int population = 64;
  int elites = 8;
  int iterations = 40;  // 0 returns the random-initialization policy
  int eval_episodes = 4;
  double sigma_init = 0.5;
  double sigma_floor = 0.02;
  DRConfig dr;
  uint64_t seed = 0;

  void validate() const;
};

MlpPolicy train_policy(const TrainerConfig& cfg);
std::vector<MlpPolicy> train_population(const std::vector<TrainerConfig>& cfgs, int jobs = 1);

struct PopulationOptions {
  int iterations_full = 600;
  int iterations_short = 60;
  int population = 64;
  int elites = 8;
  int eval_episodes = 4;
  int seeds_per_config = 3;
  std::vector<std::string> config_filter;  // empty = all suite configs
};

// One TrainerConfig per (DR-suite config, seed index); ids are <config>-s<k>.
std::vector<TrainerConfig> preset_population(uint64_t master_seed,
                                             const PopulationOptions& opts = {});

}  // namespace vsdr
