#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace vsdr {

// Rows are observations, columns are feature dimensions.
struct ActivationDataset {
  std::string layer_name;
  Eigen::MatrixXd data;  // M x D

  int rows() const { return static_cast<int>(data.rows()); }
  int dim() const { return static_cast<int>(data.cols()); }
  void validate() const;  // throws std::invalid_argument on violation
};

struct EmConfig {
  int max_iters = 200;
  double tol = 1e-6;  // relative log-likelihood improvement threshold
  int n_restarts = 5;
  double variance_floor = 1e-6;
  uint64_t rng_seed = 0;
  bool standardize = false;  // off by default; fit in z-scored space, report raw-space params

  void validate() const;
  std::string fingerprint() const;  // stable serialization for cache keys
};

// Diagonal-covariance Gaussian mixture.
struct Gmm {
  int n_components = 0;
  std::string layer_name;
  Eigen::VectorXd weights;           // N
  Eigen::MatrixXd means;             // N x D
  Eigen::MatrixXd diag_covariances;  // N x D

  int dim() const { return static_cast<int>(means.cols()); }
  void validate() const;
};

// Per-restart, per-iteration total training log-likelihood, recorded when a
// caller wants to check EM monotonicity.
struct EmTrace {
  std::vector<std::vector<double>> restart_ll;
  std::vector<double> restart_final_ll;
  int best_restart = -1;
};

Gmm fit_gmm(const ActivationDataset& data, int n_components, const EmConfig& cfg,
            EmTrace* trace = nullptr);

double log_likelihood(const Gmm& gmm, const Eigen::VectorXd& x);

// One value per row; shares the vectorized path used by fitting.
Eigen::VectorXd log_likelihood_rows(const Gmm& gmm, const Eigen::MatrixXd& rows);

double mean_log_likelihood(const Gmm& gmm, const ActivationDataset& dataset);

// Text dataset format: line 1 = "<rows> <cols> <layer_name>", then one row of
// space-separated floats per observation at full round-trip precision.
void save_activation_dataset(const ActivationDataset& ds, const std::filesystem::path& path);
ActivationDataset load_activation_dataset(const std::filesystem::path& path);

std::string gmm_to_json(const Gmm& gmm, const std::string& cache_key = "");
Gmm gmm_from_json(const std::string& text, std::string* cache_key = nullptr);
void save_gmm(const Gmm& gmm, const std::filesystem::path& path, const std::string& cache_key = "");
Gmm load_gmm(const std::filesystem::path& path, std::string* cache_key = nullptr);

}  // namespace vsdr
