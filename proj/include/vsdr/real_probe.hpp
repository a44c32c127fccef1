#pragma once

#include <filesystem>
#include <string>

#include "vsdr/mixture.hpp"
#include "vsdr/policy_net.hpp"

namespace vsdr {

// Tapped activations of one layer for a batch of observation rows.
ActivationDataset taps_for_obs(const MlpPolicy& policy, const Eigen::MatrixXd& obs_rows,
                               const std::string& layer);

// Fit a mixture on the policy's training-distribution activations, then return
// the mean log-likelihood of the real observation set's taps under it.
double ood_score(const MlpPolicy& policy, const std::string& layer, int n_components,
                 const ActivationDataset& train_acts, const Eigen::MatrixXd& real_obs,
                 const EmConfig& em_cfg);
// Same scoring against an already-fitted mixture (the cached-sweep path).
double ood_score_with(const Gmm& gmm, const MlpPolicy& policy, const Eigen::MatrixXd& real_obs);

std::string gmm_cache_key(const std::filesystem::path& acts_file, const EmConfig& cfg,
                          int n_components);
Gmm fit_gmm_cached(const std::filesystem::path& acts_file, int n_components, const EmConfig& cfg,
                   const std::filesystem::path& cache_file);

}  // namespace vsdr
