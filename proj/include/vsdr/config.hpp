#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "vsdr/baselines.hpp"
#include "vsdr/mixture.hpp"

namespace vsdr {

struct PipelineConfig {
  std::string preset = "paper-analog";
  uint64_t master_seed = 90210;
  std::string out_dir = "out";
  int jobs = 1;

  // domains
  int n_train_domains = 50;
  int n_val_domains = 20;
  bool out_of_support = false;

  // trainer
  int iterations_full = 600;
  int iterations_short = 60;
  int cem_population = 64;
  int cem_elites = 8;
  int cem_eval_episodes = 4;
  int seeds_per_config = 3;
  std::vector<std::string> dr_config_filter;  // empty = whole suite

  // ground truth + expert data
  int gt_grid = 7;
  int expert_grid = 8;

  // validation
  int n_val_episodes = 500;
  std::vector<std::string> validation_types = {"heavy", "off"};
  std::vector<std::string> metrics = {"reward", "success"};

  // ood sweep
  int acts_rows = 2000;
  std::vector<std::string> layers = {"encoder", "fc0", "relu0", "fc1", "relu1"};
  std::vector<int> components = {1, 2, 5};
  int protocol_components = 2;  // fixed component count for the protocol axis
  int sparse_k = 64;
  int sparse_redraws = 10;
  EmConfig em;

  // baselines
  int critic_rollout_episodes = 100;
  CriticFitConfig critic;

  void validate() const;
  // Human-readable serialization of every knob; hashing it keys the stage cache.
  std::string serialized() const;
  std::string fingerprint() const;
};

PipelineConfig preset_config(const std::string& name);  // smoke | paper-analog | full
void apply_config_file(PipelineConfig& cfg, const std::filesystem::path& path);

}  // namespace vsdr
