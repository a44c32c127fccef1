#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "vsdr/rng.hpp"

namespace vsdr {

enum class LayerKind { affine, relu };

std::string layer_kind_name(LayerKind kind);
LayerKind layer_kind_from(const std::string& name);

struct LayerSpec {
  std::string name;
  LayerKind kind = LayerKind::affine;
  int in_dim = 0;
  int out_dim = 0;
  // The encoder stage is one affine+relu block; its tap is the post-relu output.
  bool fused_relu = false;
  Eigen::MatrixXd W;  // out_dim x in_dim, affine layers only
  Eigen::VectorXd b;  // out_dim, affine layers only

  void validate() const;
};

struct MlpPolicy {
  std::string id;
  std::vector<LayerSpec> layers;
  std::string dr_config;
  uint64_t seed = 0;
  int budget = 0;

  int obs_dim() const;
  int action_dim() const;
  void validate() const;
};

// encoder 24->32 (affine+relu), fc0, relu0, fc1, relu1, fc_out 32->action
std::vector<LayerSpec> make_policy_layers(int obs_dim = 24, int hidden = 32, int action_dim = 3);
std::vector<LayerSpec> make_critic_layers(int in_dim, int hidden = 16);
void init_layer_weights(std::vector<LayerSpec>& layers, Rng& rng);

// Plain stack evaluation, no action clamp (critics use the same machinery).
Eigen::VectorXd mlp_eval(const std::vector<LayerSpec>& layers, const Eigen::VectorXd& input);
// Row-batched variant: rows x in_dim -> rows x out_dim.
Eigen::MatrixXd mlp_batch_eval(const std::vector<LayerSpec>& layers, const Eigen::MatrixXd& rows);

// Action clamped to [-1,1]^3; the tap map holds every layer's post-operation output.
std::pair<Eigen::VectorXd, std::map<std::string, Eigen::VectorXd>> forward_with_taps(
    const MlpPolicy& policy, const Eigen::VectorXd& obs);
Eigen::VectorXd policy_action(const MlpPolicy& policy, const Eigen::VectorXd& obs);
std::map<std::string, Eigen::MatrixXd> batch_taps(const MlpPolicy& policy,
                                                  const Eigen::MatrixXd& obs_rows);

int n_params(const std::vector<LayerSpec>& layers);
Eigen::VectorXd get_params(const std::vector<LayerSpec>& layers);
void set_params(std::vector<LayerSpec>& layers, const Eigen::VectorXd& theta);

void save_weights(const std::vector<LayerSpec>& layers, const std::filesystem::path& path);
std::vector<LayerSpec> load_weights(const std::filesystem::path& path);

// Writes <dir>/<id>.json plus <dir>/<id>.weights.txt.
void save_policy(const MlpPolicy& policy, const std::filesystem::path& dir);
MlpPolicy load_policy(const std::filesystem::path& manifest_path);

}  // namespace vsdr
