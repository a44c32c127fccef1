#include "vsdr/rollout.hpp"

#include <stdexcept>

#include "vsdr/sim_validation.hpp"

namespace vsdr {

Controller policy_controller(const MlpPolicy& policy) {
  return [&policy](const Eigen::VectorXd& obs, const State&) -> Eigen::Vector3d {
    Eigen::VectorXd a = policy_action(policy, obs);
    return Eigen::Vector3d(a(0), a(1), a(2));
  };
}

Controller expert_controller() {
  return [](const Eigen::VectorXd&, const State& state) { return scripted_expert(state); };
}

State sample_init(Rng& rng) {
  State s;
  s.pos = Eigen::Vector2d(rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3));
  s.target = Eigen::Vector2d(rng.uniform(-0.6, 0.6), rng.uniform(-0.6, 0.6));
  return s;
}

std::vector<State> grid_inits(int n) {
  if (n <= 0) throw std::runtime_error("grid size must be positive");
  std::vector<State> inits;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      State s;
      s.pos = Eigen::Vector2d(0.0, 0.0);
      double x = n == 1 ? 0.0 : -0.6 + 1.2 * i / (n - 1);
      double y = n == 1 ? 0.0 : -0.6 + 1.2 * j / (n - 1);
      s.target = Eigen::Vector2d(x, y);
      inits.push_back(s);
    }
  }
  return inits;
}

namespace {

void finalize_episode(EpisodeRecord& ep) {
  MetricValues mv = evaluate_metrics(ep);
  ep.success = mv.success;
  ep.strict_success = mv.strict_success;
  ep.cumulative_reward = mv.reward;
}

}  // namespace

EpisodeRecord roll_episode_fixed(const Controller& controller, const DomainParams& domain,
                                 const State& init, uint64_t noise_seed) {
  Rng noise(noise_seed);
  EpisodeRecord ep;
  ep.domain_id = domain.id;
  State state = init;
  for (int t = 0; t < kNSteps; ++t) {
    StepRecord rec;
    rec.obs = render(state, domain, &noise);
    rec.action = controller(rec.obs, state);
    auto [next, reward] = transition(state, rec.action, domain);
    rec.reward = reward;
    rec.done = (t == kNSteps - 1);
    ep.steps.push_back(std::move(rec));
    state = next;
  }
  finalize_episode(ep);
  return ep;
}

EpisodeRecord roll_episode_dr(const Controller& controller, const DRConfig& cfg, const State& init,
                              uint64_t domain_seed, uint64_t noise_seed,
                              std::vector<DomainParams>* domains_used) {
  Rng domain_rng(domain_seed);
  Rng noise(noise_seed);
  EpisodeRecord ep;
  ep.domain_id = cfg.name;
  DomainParams domain = sample_domain(cfg, domain_rng);
  State state = init;
  for (int t = 0; t < kNSteps; ++t) {
    if (t > 0 && cfg.frequency > 0 && t % cfg.frequency == 0)
      domain = sample_domain(cfg, domain_rng);
    if (domains_used) domains_used->push_back(domain);
    StepRecord rec;
    rec.obs = render(state, domain, &noise);
    rec.action = controller(rec.obs, state);
    auto [next, reward] = transition(state, rec.action, domain);
    rec.reward = reward;
    rec.done = (t == kNSteps - 1);
    ep.steps.push_back(std::move(rec));
    state = next;
  }
  finalize_episode(ep);
  return ep;
}

std::map<std::string, ActivationDataset> collect_all_activations(const MlpPolicy& policy,
                                                                 const DRConfig& cfg, int n_obs,
                                                                 uint64_t seed,
                                                                 Eigen::MatrixXd* obs_out) {
  if (n_obs <= 0) throw std::runtime_error("activation row count must be positive");
  std::map<std::string, Eigen::MatrixXd> rows;
  for (const auto& l : policy.layers) rows[l.name] = Eigen::MatrixXd(n_obs, l.out_dim);
  if (obs_out) obs_out->resize(n_obs, policy.obs_dim());

  int row = 0;
  for (int e = 0; row < n_obs; ++e) {
    Rng init_rng(derive_seed(seed, "acts-init", e));
    State state = sample_init(init_rng);
    Rng domain_rng(derive_seed(seed, "acts-dom", e));
    Rng noise(derive_seed(seed, "acts-noise", e));
    DomainParams domain = sample_domain(cfg, domain_rng);
    for (int t = 0; t < kNSteps && row < n_obs; ++t) {
      if (t > 0 && cfg.frequency > 0 && t % cfg.frequency == 0)
        domain = sample_domain(cfg, domain_rng);
      Eigen::VectorXd obs = render(state, domain, &noise);
      auto [action, taps] = forward_with_taps(policy, obs);
      for (auto& [name, mat] : rows) mat.row(row) = taps.at(name).transpose();
      if (obs_out) obs_out->row(row) = obs.transpose();
      auto [next, reward] = transition(state, Eigen::Vector3d(action(0), action(1), action(2)),
                                       domain);
      state = next;
      ++row;
    }
  }

  std::map<std::string, ActivationDataset> out;
  for (auto& [name, mat] : rows) {
    ActivationDataset ds;
    ds.layer_name = name;
    ds.data = std::move(mat);
    out[name] = std::move(ds);
  }
  return out;
}

ActivationDataset collect_activations(const MlpPolicy& policy, const DRConfig& cfg, int n_obs,
                                      const std::string& layer, uint64_t seed) {
  bool known = false;
  for (const auto& l : policy.layers) known = known || l.name == layer;
  if (!known) throw std::runtime_error("unknown layer: " + layer);
  auto all = collect_all_activations(policy, cfg, n_obs, seed);
  return std::move(all.at(layer));
}

}  // namespace vsdr
