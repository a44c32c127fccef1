#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "vsdr/mixture.hpp"
#include "vsdr/policy_net.hpp"
#include "vsdr/testbed.hpp"

namespace vsdr {

// Controllers see the rendered observation; the scripted expert reads the true state.
using Controller = std::function<Eigen::Vector3d(const Eigen::VectorXd& obs, const State& state)>;

Controller policy_controller(const MlpPolicy& policy);
Controller expert_controller();

State sample_init(Rng& rng);
// n x n grid of targets over the target box, agent at the origin.
std::vector<State> grid_inits(int n);

EpisodeRecord roll_episode_fixed(const Controller& controller, const DomainParams& domain,
                                 const State& init, uint64_t noise_seed);
EpisodeRecord roll_episode_dr(const Controller& controller, const DRConfig& cfg, const State& init,
                              uint64_t domain_seed, uint64_t noise_seed,
                              std::vector<DomainParams>* domains_used = nullptr);

// Rollouts under the policy's own training distribution; rows are per-step taps.
std::map<std::string, ActivationDataset> collect_all_activations(const MlpPolicy& policy,
                                                                 const DRConfig& cfg, int n_obs,
                                                                 uint64_t seed,
                                                                 Eigen::MatrixXd* obs_out = nullptr);
ActivationDataset collect_activations(const MlpPolicy& policy, const DRConfig& cfg, int n_obs,
                                      const std::string& layer, uint64_t seed);

}  // namespace vsdr
