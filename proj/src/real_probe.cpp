#include "vsdr/real_probe.hpp"

#include <stdexcept>

#include "vsdr/io_util.hpp"

namespace vsdr {

ActivationDataset taps_for_obs(const MlpPolicy& policy, const Eigen::MatrixXd& obs_rows,
                               const std::string& layer) {
  bool known = false;
  for (const auto& l : policy.layers) known = known || l.name == layer;
  if (!known) throw std::invalid_argument("unknown layer: " + layer);
  auto taps = batch_taps(policy, obs_rows);
  ActivationDataset ds;
  ds.layer_name = layer;
  ds.data = std::move(taps.at(layer));
  return ds;
}

double ood_score(const MlpPolicy& policy, const std::string& layer, int n_components,
                 const ActivationDataset& train_acts, const Eigen::MatrixXd& real_obs,
                 const EmConfig& em_cfg) {
  if (train_acts.layer_name != layer)
    throw std::invalid_argument("training activations are for layer " + train_acts.layer_name +
                                ", not " + layer);
  Gmm gmm = fit_gmm(train_acts, n_components, em_cfg);
  return ood_score_with(gmm, policy, real_obs);
}

double ood_score_with(const Gmm& gmm, const MlpPolicy& policy, const Eigen::MatrixXd& real_obs) {
  ActivationDataset taps = taps_for_obs(policy, real_obs, gmm.layer_name);
  return mean_log_likelihood(gmm, taps);
}

std::string gmm_cache_key(const std::filesystem::path& acts_file, const EmConfig& cfg,
                          int n_components) {
  std::string bytes = read_file(acts_file);
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a(bytes.data(), bytes.size())));
  return std::string(buf) + ":" + cfg.fingerprint() + ":n=" + std::to_string(n_components);
}

Gmm fit_gmm_cached(const std::filesystem::path& acts_file, int n_components, const EmConfig& cfg,
                   const std::filesystem::path& cache_file) {
  std::string key = gmm_cache_key(acts_file, cfg, n_components);
  if (file_exists(cache_file)) {
    std::string stored;
    Gmm gmm = load_gmm(cache_file, &stored);
    if (stored == key) return gmm;
  }
  ActivationDataset ds = load_activation_dataset(acts_file);
  Gmm gmm = fit_gmm(ds, n_components, cfg);
  save_gmm(gmm, cache_file, key);
  return gmm;
}

}  // namespace vsdr
