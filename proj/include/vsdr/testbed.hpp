#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "vsdr/rng.hpp"

namespace vsdr {

inline constexpr int kObsDim = 24;
inline constexpr int kActionDim = 3;
inline constexpr int kNSteps = 20;
inline constexpr double kGoalRadius = 0.05;
inline constexpr double kStepGain = 0.1;
inline constexpr double kMildPerturbation = 0.05;

struct DomainParams {
  std::string id;
  Eigen::MatrixXd render_matrix;  // kObsDim x 4, maps [agent x, agent y, target x, target y]
  Eigen::VectorXd render_bias;    // kObsDim
  double gain = 1.0;
  double noise_scale = 0.0;
  double drag = 0.0;

  void validate() const;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

struct DomainRanges {
  // Matrix and bias entries are sampled from nominal-centered intervals.
  double matrix_halfwidth = 0.0;
  double bias_halfwidth = 0.0;
  Interval gain{1.0, 1.0};
  Interval noise_scale{0.0, 0.0};
  Interval drag{0.0, 0.0};
};

enum class DRMode { heavy, mild, off };
std::string dr_mode_name(DRMode mode);
DRMode dr_mode_from(const std::string& name);

struct DRConfig {
  std::string name;
  DRMode mode = DRMode::off;
  int frequency = 0;  // 0 = one draw per episode at reset; n >= 1 = fresh draw every n steps
  double perturbation_scale = 0.0;
  DomainParams nominal;
  DomainRanges ranges;

  void validate() const;
};

struct State {
  Eigen::Vector2d pos{0.0, 0.0};
  Eigen::Vector2d target{0.0, 0.0};
};

struct StepRecord {
  Eigen::VectorXd obs;  // observation the controller acted on
  Eigen::Vector3d action;
  double reward = 0.0;
  bool done = false;
};

struct EpisodeRecord {
  std::string domain_id;
  std::vector<StepRecord> steps;
  bool success = false;
  bool strict_success = false;
  double cumulative_reward = 0.0;
};

// Point-mass move plus reward. The goal bonus +1 fires when the post-move
// position is within kGoalRadius and the hold component is engaged; since the
// distance term is always <= 0 (positions and targets live in a small box),
// reward > 0.5 identifies goal steps exactly.
std::pair<State, double> transition(const State& s, const Eigen::Vector3d& action,
                                    const DomainParams& phi);
Eigen::VectorXd render(const State& s, const DomainParams& phi, Rng* noise_rng);

struct StepResult {
  State state;
  Eigen::VectorXd obs;
  double reward = 0.0;
};
StepResult step(const State& s, const Eigen::Vector3d& action, const DomainParams& phi, Rng& rng);

DomainParams default_nominal();
DomainRanges default_ranges();
DomainParams sample_domain(const DRConfig& cfg, Rng& rng);

struct DomainSets {
  std::vector<DomainParams> train;
  std::vector<DomainParams> validation;       // heavy held-out set
  std::vector<DomainParams> validation_mild;  // mild held-out set
  DomainParams real;
};
DomainSets make_domain_sets(uint64_t seed, bool out_of_support = false, int n_train = 50,
                            int n_val = 20);

Eigen::Vector3d scripted_expert(const State& s);

// The training-population presets: heavy/mild at frequencies {0,1,2,5}, eight
// widened-range heavy variants, off, and truncated-budget twins.
std::vector<DRConfig> default_dr_suite();

enum class Protocol { expert, sparse_expert, initial };
std::string protocol_name(Protocol p);
Protocol protocol_from(const std::string& name);
Eigen::MatrixXd collect_protocol(const std::vector<EpisodeRecord>& expert_episodes, Protocol p,
                                 int k, uint64_t seed);

void save_domain_sets(const DomainSets& sets, const std::filesystem::path& path);
DomainSets load_domain_sets(const std::filesystem::path& path);
void save_episodes_jsonl(const std::vector<EpisodeRecord>& episodes,
                         const std::filesystem::path& path,
                         const std::vector<std::string>* episode_ids = nullptr);
std::vector<EpisodeRecord> load_episodes_jsonl(const std::filesystem::path& path,
                                               std::vector<std::string>* episode_ids = nullptr);

}  // namespace vsdr
