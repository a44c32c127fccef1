#pragma once

#include <string>

#include "vsdr/policy_net.hpp"
#include "vsdr/testbed.hpp"

namespace vsdr::testutil {

// Hand-built goal reacher: decodes err = target - pos from the rendered
// observation with the pseudo-inverse of the domain's projection, then emits
// clamp(kp*err) with the hold engaged. Signed values pass through the relus
// as a positive/negative channel pair.
inline MlpPolicy solver_policy(const DomainParams& domain, const std::string& id = "solver",
                               double kp = 12.0) {
  MlpPolicy policy;
  policy.id = id;
  policy.dr_config = "handmade";
  policy.layers = make_policy_layers();

  Eigen::MatrixXd pinv = domain.render_matrix.completeOrthogonalDecomposition().pseudoInverse();
  Eigen::MatrixXd diff(2, 4);  // [target - pos] selector over [pos; target]
  diff << -1, 0, 1, 0, 0, -1, 0, 1;
  Eigen::MatrixXd A = diff * pinv / domain.gain;
  Eigen::Vector2d c = -diff * pinv * domain.render_bias;

  auto& enc = policy.layers[0];
  enc.W.topRows(2) = kp * A;
  enc.W.middleRows(2, 2) = -kp * A;
  enc.b.head(2) = kp * c;
  enc.b.segment(2, 2) = -kp * c;

  auto& fc0 = policy.layers[1];
  fc0.W.setIdentity();
  auto& fc1 = policy.layers[3];
  fc1.W.setIdentity();
  fc1.b(4) = 1.0;  // hold channel

  auto& out = policy.layers[5];
  out.W(0, 0) = 1.0;
  out.W(0, 2) = -1.0;
  out.W(1, 1) = 1.0;
  out.W(1, 3) = -1.0;
  out.W(2, 4) = 1.0;

  policy.validate();
  return policy;
}

inline MlpPolicy random_policy(const std::string& id, uint64_t seed) {
  MlpPolicy policy;
  policy.id = id;
  policy.dr_config = "random";
  policy.seed = seed;
  policy.layers = make_policy_layers();
  Rng rng(derive_seed(seed, "init"));
  init_layer_weights(policy.layers, rng);
  policy.validate();
  return policy;
}

}  // namespace vsdr::testutil
