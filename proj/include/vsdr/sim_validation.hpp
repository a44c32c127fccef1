#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "vsdr/rollout.hpp"

namespace vsdr {

enum class Metric { reward, success, strict_success };
std::string metric_name(Metric m);
Metric metric_from(const std::string& name);

struct MetricValues {
  double reward = 0.0;
  bool success = false;
  bool strict_success = false;

  double value(Metric m) const;
};

// reward = sum of step rewards; success = the goal criterion held at >= 1 step;
// strict_success = the criterion held at some step and at every later step
// through the end of the episode (equivalently, it holds at the final step).
MetricValues evaluate_metrics(const EpisodeRecord& episode);

// Per-episode metric values; the mean of this vector is the validation score.
// Domain picks and initial states are shared across policies per episode index;
// only the noise stream is salted with id_tag.
Eigen::VectorXd validate_episode_values(const Controller& controller,
                                        const std::vector<DomainParams>& domains, int n_episodes,
                                        Metric metric, uint64_t seed, const std::string& id_tag);
double validate_controller(const Controller& controller, const std::vector<DomainParams>& domains,
                           int n_episodes, Metric metric, uint64_t seed,
                           const std::string& id_tag);
double validate(const MlpPolicy& policy, const std::vector<DomainParams>& domains, int n_episodes,
                Metric metric, uint64_t seed);
// All three metrics from one shared set of rollouts, ordered {reward, success, strict}.
std::array<double, 3> validate_all(const MlpPolicy& policy,
                                   const std::vector<DomainParams>& domains, int n_episodes,
                                   uint64_t seed);

}  // namespace vsdr
