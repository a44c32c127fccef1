#include "vsdr/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace vsdr {

void TrainerConfig::validate() const {
  if (policy_id.empty()) throw std::invalid_argument("trainer config has no policy id");
  if (population < 2) throw std::invalid_argument(policy_id + ": population must be >= 2");
  if (elites < 1 || elites > population)
    throw std::invalid_argument(policy_id + ": elites must lie in [1, population]");
  if (iterations < 0) throw std::invalid_argument(policy_id + ": iterations must be >= 0");
  if (eval_episodes < 1) throw std::invalid_argument(policy_id + ": eval_episodes must be >= 1");
  if (sigma_init <= 0 || sigma_floor <= 0)
    throw std::invalid_argument(policy_id + ": sigma parameters must be positive");
  dr.validate();
}

MlpPolicy train_policy(const TrainerConfig& cfg) {
  cfg.validate();
  MlpPolicy policy;
  policy.id = cfg.policy_id;
  policy.dr_config = cfg.dr.name;
  policy.seed = cfg.seed;
  policy.budget = cfg.iterations;
  policy.layers = make_policy_layers();
  Rng init_rng(derive_seed(cfg.seed, "init"));
  init_layer_weights(policy.layers, init_rng);

  const int dim = n_params(policy.layers);
  Eigen::VectorXd theta = get_params(policy.layers);
  Eigen::VectorXd sigma = Eigen::VectorXd::Constant(dim, cfg.sigma_init);

  struct EpisodeSpec {
    State init;
    uint64_t domain_seed;
    uint64_t noise_seed;
  };

  MlpPolicy work = policy;
  Controller controller = policy_controller(work);

  for (int iter = 0; iter < cfg.iterations; ++iter) {
    // Common random numbers: every candidate sees the same episodes.
    std::vector<EpisodeSpec> episodes(cfg.eval_episodes);
    for (int e = 0; e < cfg.eval_episodes; ++e) {
      Rng init_rng_e(derive_seed(cfg.seed, "train-init", iter, e));
      episodes[e] = {sample_init(init_rng_e), derive_seed(cfg.seed, "train-dom", iter, e),
                     derive_seed(cfg.seed, "train-noise", iter, e)};
    }

    Rng cand_rng(derive_seed(cfg.seed, "train-cand", iter));
    Eigen::MatrixXd cands(cfg.population, dim);
    for (int c = 0; c < cfg.population; ++c)
      for (int d = 0; d < dim; ++d) cands(c, d) = theta(d) + sigma(d) * cand_rng.gauss();

    Eigen::VectorXd scores(cfg.population);
    for (int c = 0; c < cfg.population; ++c) {
      set_params(work.layers, cands.row(c).transpose());
      double total = 0.0;
      for (const auto& ep : episodes)
        total += roll_episode_dr(controller, cfg.dr, ep.init, ep.domain_seed, ep.noise_seed)
                     .cumulative_reward;
      scores(c) = total / cfg.eval_episodes;
    }

    std::vector<int> order(cfg.population);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return scores(a) > scores(b); });

    Eigen::MatrixXd elite(cfg.elites, dim);
    for (int e = 0; e < cfg.elites; ++e) elite.row(e) = cands.row(order[e]);
    theta = elite.colwise().mean().transpose();
    Eigen::VectorXd var =
        (elite.rowwise() - theta.transpose()).array().square().colwise().mean().transpose();
    sigma = var.cwiseSqrt().cwiseMax(cfg.sigma_floor);
  }

  set_params(policy.layers, theta);
  return policy;
}

std::vector<MlpPolicy> train_population(const std::vector<TrainerConfig>& cfgs, int jobs) {
  std::vector<MlpPolicy> policies(cfgs.size());
  if (jobs <= 1) {
    for (size_t i = 0; i < cfgs.size(); ++i) policies[i] = train_policy(cfgs[i]);
    return policies;
  }
  std::atomic<size_t> next{0};
  std::vector<std::thread> workers;
  std::mutex err_mutex;
  std::string error;
  for (int w = 0; w < jobs; ++w) {
    workers.emplace_back([&]() {
      for (size_t i = next.fetch_add(1); i < cfgs.size(); i = next.fetch_add(1)) {
        try {
          policies[i] = train_policy(cfgs[i]);
        } catch (const std::exception& ex) {
          std::scoped_lock lock(err_mutex);
          if (error.empty()) error = ex.what();
        }
      }
    });
  }
  for (auto& t : workers) t.join();
  if (!error.empty()) throw std::runtime_error(error);
  return policies;
}

std::vector<TrainerConfig> preset_population(uint64_t master_seed,
                                             const PopulationOptions& opts) {
  std::vector<TrainerConfig> configs;
  for (const auto& dr : default_dr_suite()) {
    if (!opts.config_filter.empty() &&
        std::find(opts.config_filter.begin(), opts.config_filter.end(), dr.name) ==
            opts.config_filter.end())
      continue;
    bool short_budget = dr.name.size() > 6 && dr.name.ends_with("-short");
    for (int k = 0; k < opts.seeds_per_config; ++k) {
      TrainerConfig cfg;
      cfg.policy_id = dr.name + "-s" + std::to_string(k);
      cfg.population = opts.population;
      cfg.elites = opts.elites;
      cfg.iterations = short_budget ? opts.iterations_short : opts.iterations_full;
      cfg.eval_episodes = opts.eval_episodes;
      cfg.dr = dr;
      cfg.seed = derive_seed(master_seed, "train", cfg.policy_id);
      configs.push_back(std::move(cfg));
    }
  }
  return configs;
}

}  // namespace vsdr
