#include "vsdr/baselines.hpp"

#include <json.hpp>

#include <algorithm>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "vsdr/io_util.hpp"

namespace vsdr {

void LabeledTransitionSet::validate() const {
  int n = size();
  if (n == 0) throw std::invalid_argument("labeled transition set is empty");
  if (obs.rows() != n || actions.rows() != n ||
      static_cast<int>(episode_ids.size()) != n)
    throw std::invalid_argument("labeled transition set field lengths disagree");
  for (int l : labels)
    if (l != 0 && l != 1) throw std::invalid_argument("labels must be 0 or 1");
}

Critic fit_critic(const MlpPolicy& policy, const std::vector<EpisodeRecord>& rollouts,
                  uint64_t seed, const CriticFitConfig& cfg) {
  if (rollouts.empty()) throw std::invalid_argument("cannot fit a critic on zero rollouts");
  int total = 0;
  for (const auto& ep : rollouts) total += static_cast<int>(ep.steps.size());
  if (total == 0) throw std::invalid_argument("cannot fit a critic on empty rollouts");

  int obs_dim = static_cast<int>(rollouts.front().steps.front().obs.size());
  Eigen::MatrixXd x(total, obs_dim + kActionDim);
  Eigen::VectorXd y(total);
  int row = 0;
  for (const auto& ep : rollouts) {
    // Return-to-go of the action taken at t, accumulated from the back.
    double rtg = 0.0;
    row += static_cast<int>(ep.steps.size());
    int r = row;
    for (auto it = ep.steps.rbegin(); it != ep.steps.rend(); ++it) {
      rtg += it->reward;
      --r;
      x.row(r).head(obs_dim) = it->obs.transpose();
      x.row(r).tail(kActionDim) = it->action.transpose();
      y(r) = rtg;
    }
  }

  Critic critic;
  critic.policy_id = policy.id;
  critic.layers = make_critic_layers(obs_dim + kActionDim);
  const int dim = n_params(critic.layers);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd sigma = Eigen::VectorXd::Constant(dim, cfg.sigma_init);

  auto mse = [&](const Eigen::VectorXd& params) {
    set_params(critic.layers, params);
    Eigen::VectorXd q = mlp_batch_eval(critic.layers, x).col(0);
    return (q - y).squaredNorm() / total;
  };

  for (int iter = 0; iter < cfg.iterations; ++iter) {
    Rng cand_rng(derive_seed(seed, "critic-cand", iter));
    Eigen::MatrixXd cands(cfg.population, dim);
    for (int c = 0; c < cfg.population; ++c)
      for (int d = 0; d < dim; ++d) cands(c, d) = theta(d) + sigma(d) * cand_rng.gauss();
    Eigen::VectorXd losses(cfg.population);
    for (int c = 0; c < cfg.population; ++c) losses(c) = mse(cands.row(c).transpose());
    std::vector<int> order(cfg.population);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return losses(a) < losses(b); });
    Eigen::MatrixXd elite(cfg.elites, dim);
    for (int e = 0; e < cfg.elites; ++e) elite.row(e) = cands.row(order[e]);
    theta = elite.colwise().mean().transpose();
    Eigen::VectorXd var =
        (elite.rowwise() - theta.transpose()).array().square().colwise().mean().transpose();
    sigma = var.cwiseSqrt().cwiseMax(cfg.sigma_floor);
  }

  critic.fit_loss = mse(theta);
  return critic;
}

double critic_value(const Critic& critic, const Eigen::VectorXd& obs,
                    const Eigen::VectorXd& action) {
  Eigen::VectorXd in(obs.size() + action.size());
  in << obs, action;
  return mlp_eval(critic.layers, in)(0);
}

Eigen::VectorXd critic_values(const Critic& critic, const LabeledTransitionSet& data) {
  data.validate();
  Eigen::MatrixXd in(data.size(), data.obs.cols() + data.actions.cols());
  in << data.obs, data.actions;
  return mlp_batch_eval(critic.layers, in).col(0);
}

double opc_from_values(const Eigen::VectorXd& q, const std::vector<int>& labels) {
  int n = static_cast<int>(labels.size());
  if (q.size() != n) throw std::invalid_argument("Q vector length mismatch");
  int n_succ = 0;
  for (int l : labels) n_succ += l;
  int n_fail = n - n_succ;
  if (n_succ == 0 || n_fail == 0)
    throw std::invalid_argument("OPC needs both successful and failed episodes");

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return q(a) < q(b); });

  // Walk thresholds b over the distinct Q values in ascending order; at the last
  // index j of each value, P(Q > b | S) is the success count above j and
  // P(Q <= b | F) is the failure count up to j.
  double best = 0.0;
  int succ_le = 0, fail_le = 0;
  for (int i = 0; i < n; ++i) {
    int idx = order[i];
    succ_le += labels[idx];
    fail_le += 1 - labels[idx];
    if (i + 1 < n && q(order[i + 1]) == q(idx)) continue;
    double acc = 0.5 * static_cast<double>(n_succ - succ_le) / n_succ +
                 0.5 * static_cast<double>(fail_le) / n_fail;
    best = std::max(best, acc);
  }
  return best;
}

double opc(const Critic& critic, const LabeledTransitionSet& data) {
  return opc_from_values(critic_values(critic, data), data.labels);
}

double soft_opc_from_values(const Eigen::VectorXd& q, const std::vector<int>& labels) {
  int n = static_cast<int>(labels.size());
  if (q.size() != n) throw std::invalid_argument("Q vector length mismatch");
  if (n == 0) throw std::invalid_argument("SoftOPC on empty data");
  double succ_sum = 0.0;
  int n_succ = 0;
  for (int i = 0; i < n; ++i) {
    if (labels[i]) {
      succ_sum += q(i);
      ++n_succ;
    }
  }
  if (n_succ == 0) throw std::invalid_argument("SoftOPC needs at least one successful episode");
  return succ_sum / n_succ - q.mean();
}

double soft_opc(const Critic& critic, const LabeledTransitionSet& data) {
  return soft_opc_from_values(critic_values(critic, data), data.labels);
}

LabeledTransitionSet build_labeled_set(const std::vector<EpisodeRecord>& episodes,
                                       const std::vector<std::string>& episode_ids) {
  if (episodes.empty()) throw std::invalid_argument("no episodes to label");
  if (!episode_ids.empty() && episode_ids.size() != episodes.size())
    throw std::invalid_argument("episode id list does not match episode count");
  int total = 0;
  for (const auto& ep : episodes) total += static_cast<int>(ep.steps.size());
  if (total == 0) throw std::invalid_argument("no transitions to label");

  int obs_dim = 0;
  for (const auto& ep : episodes)
    if (!ep.steps.empty()) {
      obs_dim = static_cast<int>(ep.steps.front().obs.size());
      break;
    }
  LabeledTransitionSet set;
  set.obs.resize(total, obs_dim);
  set.actions.resize(total, kActionDim);
  set.labels.reserve(total);
  set.episode_ids.reserve(total);
  int row = 0;
  for (size_t e = 0; e < episodes.size(); ++e) {
    const auto& ep = episodes[e];
    std::string id = episode_ids.empty() ? "ep" + std::to_string(e) : episode_ids[e];
    for (const auto& st : ep.steps) {
      set.obs.row(row) = st.obs.transpose();
      set.actions.row(row) = st.action.transpose();
      set.labels.push_back(ep.success ? 1 : 0);
      set.episode_ids.push_back(id);
      ++row;
    }
  }
  set.validate();
  return set;
}

void save_labeled_set(const LabeledTransitionSet& data, const std::filesystem::path& path) {
  data.validate();
  std::string out;
  for (int i = 0; i < data.size(); ++i) {
    nlohmann::json j;
    std::vector<double> obs(data.obs.cols());
    for (int c = 0; c < data.obs.cols(); ++c) obs[c] = data.obs(i, c);
    std::vector<double> act(data.actions.cols());
    for (int c = 0; c < data.actions.cols(); ++c) act[c] = data.actions(i, c);
    j["obs"] = obs;
    j["action"] = act;
    j["label"] = data.labels[i] ? "success" : "failure";
    j["episode_id"] = data.episode_ids[i];
    out += j.dump();
    out += '\n';
  }
  atomic_write_file(path, out);
}

LabeledTransitionSet load_labeled_set(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::vector<std::vector<double>> obs, acts;
  LabeledTransitionSet set;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    auto j = nlohmann::json::parse(line);
    obs.push_back(j.at("obs").get<std::vector<double>>());
    acts.push_back(j.at("action").get<std::vector<double>>());
    std::string label = j.at("label").get<std::string>();
    if (label != "success" && label != "failure")
      throw std::runtime_error("bad label in " + path.string() + ": " + label);
    set.labels.push_back(label == "success" ? 1 : 0);
    set.episode_ids.push_back(j.at("episode_id").get<std::string>());
  }
  int n = static_cast<int>(obs.size());
  if (n == 0) throw std::runtime_error("empty labeled set in " + path.string());
  set.obs.resize(n, static_cast<int>(obs[0].size()));
  set.actions.resize(n, static_cast<int>(acts[0].size()));
  for (int i = 0; i < n; ++i) {
    for (size_t c = 0; c < obs[i].size(); ++c) set.obs(i, static_cast<int>(c)) = obs[i][c];
    for (size_t c = 0; c < acts[i].size(); ++c) set.actions(i, static_cast<int>(c)) = acts[i][c];
  }
  set.validate();
  return set;
}

void save_critic(const Critic& critic, const std::filesystem::path& path) {
  nlohmann::json j;
  j["policy_id"] = critic.policy_id;
  j["fit_loss"] = critic.fit_loss;
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : critic.layers) {
    nlohmann::json lj;
    lj["name"] = l.name;
    lj["kind"] = layer_kind_name(l.kind);
    lj["in_dim"] = l.in_dim;
    lj["out_dim"] = l.out_dim;
    lj["fused_relu"] = l.fused_relu;
    if (l.kind == LayerKind::affine) {
      std::vector<std::vector<double>> w(l.out_dim, std::vector<double>(l.in_dim));
      for (int i = 0; i < l.out_dim; ++i)
        for (int c = 0; c < l.in_dim; ++c) w[i][c] = l.W(i, c);
      lj["W"] = w;
      lj["b"] = std::vector<double>(l.b.data(), l.b.data() + l.b.size());
    }
    layers.push_back(std::move(lj));
  }
  j["layers"] = std::move(layers);
  atomic_write_file(path, j.dump(2) + "\n");
}

Critic load_critic(const std::filesystem::path& path) {
  auto j = nlohmann::json::parse(read_file(path));
  Critic critic;
  critic.policy_id = j.at("policy_id").get<std::string>();
  critic.fit_loss = j.at("fit_loss").get<double>();
  for (const auto& lj : j.at("layers")) {
    LayerSpec l;
    l.name = lj.at("name").get<std::string>();
    l.kind = layer_kind_from(lj.at("kind").get<std::string>());
    l.in_dim = lj.at("in_dim").get<int>();
    l.out_dim = lj.at("out_dim").get<int>();
    l.fused_relu = lj.at("fused_relu").get<bool>();
    if (l.kind == LayerKind::affine) {
      auto w = lj.at("W").get<std::vector<std::vector<double>>>();
      l.W.resize(l.out_dim, l.in_dim);
      for (int i = 0; i < l.out_dim; ++i)
        for (int c = 0; c < l.in_dim; ++c) l.W(i, c) = w[i][c];
      auto b = lj.at("b").get<std::vector<double>>();
      l.b = Eigen::Map<Eigen::VectorXd>(b.data(), static_cast<int>(b.size()));
    }
    l.validate();
    critic.layers.push_back(std::move(l));
  }
  return critic;
}

}  // namespace vsdr
