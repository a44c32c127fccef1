#include "vsdr/sim_validation.hpp"

#include <stdexcept>

namespace vsdr {

std::string metric_name(Metric m) {
  switch (m) {
    case Metric::reward: return "reward";
    case Metric::success: return "success";
    case Metric::strict_success: return "strict_success";
  }
  throw std::invalid_argument("bad metric");
}

Metric metric_from(const std::string& name) {
  if (name == "reward") return Metric::reward;
  if (name == "success") return Metric::success;
  if (name == "strict_success") return Metric::strict_success;
  throw std::invalid_argument("unknown metric: " + name);
}

double MetricValues::value(Metric m) const {
  switch (m) {
    case Metric::reward: return reward;
    case Metric::success: return success ? 1.0 : 0.0;
    case Metric::strict_success: return strict_success ? 1.0 : 0.0;
  }
  throw std::invalid_argument("bad metric");
}

MetricValues evaluate_metrics(const EpisodeRecord& episode) {
  if (static_cast<int>(episode.steps.size()) > kNSteps)
    throw std::invalid_argument("episode longer than " + std::to_string(kNSteps) + " steps");
  MetricValues mv;
  // The goal bonus is the only way a step reward can exceed 0.5.
  auto goal = [](const StepRecord& st) { return st.reward > 0.5; };
  for (const auto& st : episode.steps) {
    mv.reward += st.reward;
    mv.success = mv.success || goal(st);
  }
  // Held at some step n and at every step after n through episode end; such an
  // n exists exactly when the criterion holds at the final step.
  mv.strict_success = !episode.steps.empty() && goal(episode.steps.back());
  return mv;
}

Eigen::VectorXd validate_episode_values(const Controller& controller,
                                        const std::vector<DomainParams>& domains, int n_episodes,
                                        Metric metric, uint64_t seed, const std::string& id_tag) {
  if (domains.empty()) throw std::invalid_argument("empty validation domain set");
  if (n_episodes < 1) throw std::invalid_argument("need at least one validation episode");
  Eigen::VectorXd values(n_episodes);
  for (int e = 0; e < n_episodes; ++e) {
    Rng dom_rng(derive_seed(seed, "val-dom", e));
    const DomainParams& domain = domains[dom_rng.uniform_int(domains.size())];
    Rng init_rng(derive_seed(seed, "val-init", e));
    State init = sample_init(init_rng);
    uint64_t noise_seed = derive_seed(derive_seed(seed, "val-noise", e), id_tag);
    EpisodeRecord ep = roll_episode_fixed(controller, domain, init, noise_seed);
    values(e) = evaluate_metrics(ep).value(metric);
  }
  return values;
}

double validate_controller(const Controller& controller, const std::vector<DomainParams>& domains,
                           int n_episodes, Metric metric, uint64_t seed,
                           const std::string& id_tag) {
  return validate_episode_values(controller, domains, n_episodes, metric, seed, id_tag).mean();
}

double validate(const MlpPolicy& policy, const std::vector<DomainParams>& domains, int n_episodes,
                Metric metric, uint64_t seed) {
  return validate_controller(policy_controller(policy), domains, n_episodes, metric, seed,
                             policy.id);
}

std::array<double, 3> validate_all(const MlpPolicy& policy,
                                   const std::vector<DomainParams>& domains, int n_episodes,
                                   uint64_t seed) {
  if (domains.empty()) throw std::invalid_argument("empty validation domain set");
  if (n_episodes < 1) throw std::invalid_argument("need at least one validation episode");
  Controller controller = policy_controller(policy);
  std::array<double, 3> sums{0.0, 0.0, 0.0};
  for (int e = 0; e < n_episodes; ++e) {
    Rng dom_rng(derive_seed(seed, "val-dom", e));
    const DomainParams& domain = domains[dom_rng.uniform_int(domains.size())];
    Rng init_rng(derive_seed(seed, "val-init", e));
    State init = sample_init(init_rng);
    uint64_t noise_seed = derive_seed(derive_seed(seed, "val-noise", e), policy.id);
    EpisodeRecord ep = roll_episode_fixed(controller, domain, init, noise_seed);
    MetricValues mv = evaluate_metrics(ep);
    sums[0] += mv.reward;
    sums[1] += mv.success ? 1.0 : 0.0;
    sums[2] += mv.strict_success ? 1.0 : 0.0;
  }
  for (auto& s : sums) s /= n_episodes;
  return sums;
}

}  // namespace vsdr
