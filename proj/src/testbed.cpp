#include "vsdr/testbed.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "vsdr/io_util.hpp"

namespace vsdr {

void DomainParams::validate() const {
  if (render_matrix.rows() != kObsDim || render_matrix.cols() != 4)
    throw std::invalid_argument("domain " + id + ": render_matrix must be " +
                             std::to_string(kObsDim) + "x4");
  if (render_bias.size() != kObsDim)
    throw std::invalid_argument("domain " + id + ": render_bias must have " +
                             std::to_string(kObsDim) + " entries");
  if (!render_matrix.allFinite() || !render_bias.allFinite() || !std::isfinite(gain) ||
      !std::isfinite(noise_scale) || !std::isfinite(drag))
    throw std::invalid_argument("domain " + id + ": non-finite parameter");
  if (noise_scale < 0) throw std::invalid_argument("domain " + id + ": noise_scale must be >= 0");
  if (drag < 0 || drag > 0.9)
    throw std::invalid_argument("domain " + id + ": drag must lie in [0, 0.9]");
}

std::string dr_mode_name(DRMode mode) {
  switch (mode) {
    case DRMode::heavy: return "heavy";
    case DRMode::mild: return "mild";
    case DRMode::off: return "off";
  }
  throw std::invalid_argument("bad DR mode");
}

DRMode dr_mode_from(const std::string& name) {
  if (name == "heavy") return DRMode::heavy;
  if (name == "mild") return DRMode::mild;
  if (name == "off") return DRMode::off;
  throw std::invalid_argument("unknown DR mode: " + name);
}

void DRConfig::validate() const {
  if (frequency != 0 && frequency != 1 && frequency != 2 && frequency != 5)
    throw std::invalid_argument("DR config " + name + ": frequency must be one of {0,1,2,5}");
  if (mode == DRMode::mild && perturbation_scale <= 0)
    throw std::invalid_argument("DR config " + name + ": mild mode needs perturbation_scale > 0");
  nominal.validate();
}

std::pair<State, double> transition(const State& s, const Eigen::Vector3d& action,
                                    const DomainParams& phi) {
  Eigen::Vector3d a = action.cwiseMax(-1.0).cwiseMin(1.0);
  State next = s;
  next.pos += kStepGain * (1.0 - phi.drag) * a.head<2>();
  double dist = (next.pos - next.target).norm();
  double reward = -dist + ((dist <= kGoalRadius && a(2) > 0) ? 1.0 : 0.0);
  return {next, reward};
}

Eigen::VectorXd render(const State& s, const DomainParams& phi, Rng* noise_rng) {
  Eigen::Vector4d z;
  z << s.pos(0), s.pos(1), s.target(0), s.target(1);
  Eigen::VectorXd obs = phi.gain * (phi.render_matrix * z + phi.render_bias);
  if (noise_rng) {
    for (int i = 0; i < obs.size(); ++i) obs(i) += phi.noise_scale * noise_rng->gauss();
  }
  return obs;
}

StepResult step(const State& s, const Eigen::Vector3d& action, const DomainParams& phi, Rng& rng) {
  auto [next, reward] = transition(s, action, phi);
  return {next, render(next, phi, &rng), reward};
}

DomainParams default_nominal() {
  DomainParams d;
  d.id = "nominal";
  // Fixed projection; entries are reproducible constants, not per-run randomness.
  Rng rng(0x76d5a1e2c93b4f01ull);
  d.render_matrix.resize(kObsDim, 4);
  for (int i = 0; i < kObsDim; ++i)
    for (int j = 0; j < 4; ++j) d.render_matrix(i, j) = rng.uniform(-1.0, 1.0);
  d.render_bias = Eigen::VectorXd::Zero(kObsDim);
  d.gain = 1.0;
  d.noise_scale = 0.0;
  d.drag = 0.0;
  return d;
}

DomainRanges default_ranges() {
  // Wide enough that a nominal-only policy breaks on a fresh draw, narrow
  // enough that the reaching task stays solvable under the randomization.
  DomainRanges r;
  r.matrix_halfwidth = 0.1;
  r.bias_halfwidth = 0.25;
  r.gain = {0.7, 1.4};
  r.noise_scale = {0.0, 0.025};
  r.drag = {0.0, 0.3};
  return r;
}

DomainParams sample_domain(const DRConfig& cfg, Rng& rng) {
  // Draw order is pinned: matrix entries row-major, bias, gain, noise, drag.
  DomainParams d = cfg.nominal;
  switch (cfg.mode) {
    case DRMode::off:
      return d;
    case DRMode::heavy: {
      const auto& rr = cfg.ranges;
      for (int i = 0; i < d.render_matrix.rows(); ++i)
        for (int j = 0; j < d.render_matrix.cols(); ++j)
          d.render_matrix(i, j) = rng.uniform(cfg.nominal.render_matrix(i, j) - rr.matrix_halfwidth,
                                              cfg.nominal.render_matrix(i, j) + rr.matrix_halfwidth);
      for (int i = 0; i < d.render_bias.size(); ++i)
        d.render_bias(i) = rng.uniform(cfg.nominal.render_bias(i) - rr.bias_halfwidth,
                                       cfg.nominal.render_bias(i) + rr.bias_halfwidth);
      d.gain = rng.uniform(rr.gain.lo, rr.gain.hi);
      d.noise_scale = rng.uniform(rr.noise_scale.lo, rr.noise_scale.hi);
      d.drag = rng.uniform(rr.drag.lo, rr.drag.hi);
      break;
    }
    case DRMode::mild: {
      double ps = cfg.perturbation_scale;
      for (int i = 0; i < d.render_matrix.rows(); ++i)
        for (int j = 0; j < d.render_matrix.cols(); ++j)
          d.render_matrix(i, j) += ps * rng.uniform(-1.0, 1.0);
      for (int i = 0; i < d.render_bias.size(); ++i)
        d.render_bias(i) += ps * rng.uniform(-1.0, 1.0);
      d.gain += ps * rng.uniform(-1.0, 1.0);
      d.noise_scale = std::max(0.0, d.noise_scale + ps * rng.uniform(-1.0, 1.0));
      d.drag = std::clamp(d.drag + ps * rng.uniform(-1.0, 1.0), 0.0, 0.9);
      break;
    }
  }
  return d;
}

namespace {

std::string two_digit(int i) {
  std::string s = std::to_string(i);
  return s.size() < 2 ? "0" + s : s;
}

}  // namespace

DomainSets make_domain_sets(uint64_t seed, bool out_of_support, int n_train, int n_val) {
  DRConfig heavy;
  heavy.name = "heavy";
  heavy.mode = DRMode::heavy;
  heavy.nominal = default_nominal();
  heavy.ranges = default_ranges();

  DRConfig mild;
  mild.name = "mild";
  mild.mode = DRMode::mild;
  mild.perturbation_scale = kMildPerturbation;
  mild.nominal = heavy.nominal;

  DomainSets sets;
  Rng train_rng(derive_seed(seed, "train-domains"));
  for (int i = 0; i < n_train; ++i) {
    sets.train.push_back(sample_domain(heavy, train_rng));
    sets.train.back().id = "train-" + two_digit(i);
  }
  Rng val_rng(derive_seed(seed, "val-domains"));
  for (int i = 0; i < n_val; ++i) {
    sets.validation.push_back(sample_domain(heavy, val_rng));
    sets.validation.back().id = "val-" + two_digit(i);
  }
  Rng mild_rng(derive_seed(seed, "val-mild-domains"));
  for (int i = 0; i < n_val; ++i) {
    sets.validation_mild.push_back(sample_domain(mild, mild_rng));
    sets.validation_mild.back().id = "val-mild-" + two_digit(i);
  }
  Rng real_rng(derive_seed(seed, "real-domain"));
  sets.real = sample_domain(heavy, real_rng);
  sets.real.id = "real";
  if (out_of_support)
    sets.real.gain = heavy.ranges.gain.hi + 0.25 * (heavy.ranges.gain.hi - heavy.ranges.gain.lo);
  return sets;
}

Eigen::Vector3d scripted_expert(const State& s) {
  Eigen::Vector2d err = s.target - s.pos;
  Eigen::Vector3d a;
  a.head<2>() = (12.0 * err).cwiseMax(-1.0).cwiseMin(1.0);
  a(2) = err.norm() <= kGoalRadius ? 1.0 : 0.0;
  return a;
}

namespace {

DRConfig base_config(const std::string& name, DRMode mode, int freq, const DomainParams& nominal) {
  DRConfig c;
  c.name = name;
  c.mode = mode;
  c.frequency = freq;
  c.nominal = nominal;
  if (mode == DRMode::heavy) c.ranges = default_ranges();
  if (mode == DRMode::mild) c.perturbation_scale = kMildPerturbation;
  return c;
}

void widen_gain(DomainRanges& r) {
  double mid = 0.5 * (r.gain.lo + r.gain.hi), hw = r.gain.hi - mid;
  r.gain = {mid - 2 * hw, mid + 2 * hw};
}
void widen_bias(DomainRanges& r) { r.bias_halfwidth *= 2; }
void widen_noise(DomainRanges& r) { r.noise_scale.hi *= 2; }
void widen_matrix(DomainRanges& r) { r.matrix_halfwidth *= 2; }

}  // namespace

std::vector<DRConfig> default_dr_suite() {
  DomainParams nominal = default_nominal();
  std::vector<DRConfig> suite;
  for (int f : {0, 1, 2, 5})
    suite.push_back(base_config("heavy-freq-" + std::to_string(f), DRMode::heavy, f, nominal));
  for (int f : {0, 1, 2, 5})
    suite.push_back(base_config("mild-freq-" + std::to_string(f), DRMode::mild, f, nominal));

  using Widen = void (*)(DomainRanges&);
  const std::vector<std::pair<std::string, std::vector<Widen>>> wides = {
      {"wide-gain", {widen_gain}},
      {"wide-bias", {widen_bias}},
      {"wide-noise", {widen_noise}},
      {"wide-matrix", {widen_matrix}},
      {"wide-gain-bias", {widen_gain, widen_bias}},
      {"wide-gain-noise", {widen_gain, widen_noise}},
      {"wide-bias-noise", {widen_bias, widen_noise}},
      {"wide-all", {widen_gain, widen_bias, widen_noise, widen_matrix}},
  };
  for (const auto& [name, fns] : wides) {
    DRConfig c = base_config(name, DRMode::heavy, 1, nominal);
    for (auto fn : fns) fn(c.ranges);
    suite.push_back(c);
  }

  suite.push_back(base_config("off", DRMode::off, 0, nominal));
  suite.push_back(base_config("off-short", DRMode::off, 0, nominal));
  suite.push_back(base_config("heavy-short", DRMode::heavy, 1, nominal));
  suite.push_back(base_config("mild-short", DRMode::mild, 1, nominal));
  return suite;
}

std::string protocol_name(Protocol p) {
  switch (p) {
    case Protocol::expert: return "expert";
    case Protocol::sparse_expert: return "sparse_expert";
    case Protocol::initial: return "initial";
  }
  throw std::invalid_argument("bad protocol");
}

Protocol protocol_from(const std::string& name) {
  if (name == "expert") return Protocol::expert;
  if (name == "sparse_expert") return Protocol::sparse_expert;
  if (name == "initial") return Protocol::initial;
  throw std::invalid_argument("unknown protocol: " + name);
}

Eigen::MatrixXd collect_protocol(const std::vector<EpisodeRecord>& expert_episodes, Protocol p,
                                 int k, uint64_t seed) {
  if (expert_episodes.empty()) throw std::invalid_argument("no expert episodes");
  int total = 0;
  for (const auto& ep : expert_episodes) {
    if (ep.steps.empty()) throw std::invalid_argument("empty expert episode");
    total += static_cast<int>(ep.steps.size());
  }
  int obs_dim = static_cast<int>(expert_episodes.front().steps.front().obs.size());

  if (p == Protocol::initial) {
    Eigen::MatrixXd out(static_cast<int>(expert_episodes.size()), obs_dim);
    for (size_t e = 0; e < expert_episodes.size(); ++e)
      out.row(static_cast<int>(e)) = expert_episodes[e].steps.front().obs.transpose();
    return out;
  }

  Eigen::MatrixXd pool(total, obs_dim);
  int row = 0;
  for (const auto& ep : expert_episodes)
    for (const auto& st : ep.steps) pool.row(row++) = st.obs.transpose();
  if (p == Protocol::expert) return pool;

  if (k <= 0 || k > total)
    throw std::invalid_argument("sparse sample size " + std::to_string(k) +
                             " exceeds pool size " + std::to_string(total));
  std::vector<int> idx(total);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  Eigen::MatrixXd out(k, obs_dim);
  for (int i = 0; i < k; ++i) {
    int j = i + static_cast<int>(rng.uniform_int(static_cast<uint64_t>(total - i)));
    std::swap(idx[i], idx[j]);
    out.row(i) = pool.row(idx[i]);
  }
  return out;
}

namespace {

nlohmann::json domain_to_json(const DomainParams& d) {
  nlohmann::json j;
  j["id"] = d.id;
  std::vector<std::vector<double>> m(d.render_matrix.rows());
  for (int i = 0; i < d.render_matrix.rows(); ++i) {
    m[i].resize(d.render_matrix.cols());
    for (int c = 0; c < d.render_matrix.cols(); ++c) m[i][c] = d.render_matrix(i, c);
  }
  j["render_matrix"] = m;
  j["render_bias"] = std::vector<double>(d.render_bias.data(),
                                         d.render_bias.data() + d.render_bias.size());
  j["gain"] = d.gain;
  j["noise_scale"] = d.noise_scale;
  j["drag"] = d.drag;
  return j;
}

DomainParams domain_from_json(const nlohmann::json& j) {
  DomainParams d;
  d.id = j.at("id").get<std::string>();
  auto m = j.at("render_matrix").get<std::vector<std::vector<double>>>();
  d.render_matrix.resize(static_cast<int>(m.size()), m.empty() ? 0 : static_cast<int>(m[0].size()));
  for (size_t i = 0; i < m.size(); ++i)
    for (size_t c = 0; c < m[i].size(); ++c)
      d.render_matrix(static_cast<int>(i), static_cast<int>(c)) = m[i][c];
  auto bias = j.at("render_bias").get<std::vector<double>>();
  d.render_bias = Eigen::Map<Eigen::VectorXd>(bias.data(), static_cast<int>(bias.size()));
  d.gain = j.at("gain").get<double>();
  d.noise_scale = j.at("noise_scale").get<double>();
  d.drag = j.at("drag").get<double>();
  d.validate();
  return d;
}

}  // namespace

void save_domain_sets(const DomainSets& sets, const std::filesystem::path& path) {
  nlohmann::json j;
  for (const auto& [key, list] :
       std::initializer_list<std::pair<const char*, const std::vector<DomainParams>*>>{
           {"train", &sets.train},
           {"validation", &sets.validation},
           {"validation_mild", &sets.validation_mild}}) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& d : *list) arr.push_back(domain_to_json(d));
    j[key] = arr;
  }
  j["real"] = domain_to_json(sets.real);
  atomic_write_file(path, j.dump(2) + "\n");
}

DomainSets load_domain_sets(const std::filesystem::path& path) {
  auto j = nlohmann::json::parse(read_file(path));
  DomainSets sets;
  for (const auto& d : j.at("train")) sets.train.push_back(domain_from_json(d));
  for (const auto& d : j.at("validation")) sets.validation.push_back(domain_from_json(d));
  for (const auto& d : j.at("validation_mild"))
    sets.validation_mild.push_back(domain_from_json(d));
  sets.real = domain_from_json(j.at("real"));
  return sets;
}

void save_episodes_jsonl(const std::vector<EpisodeRecord>& episodes,
                         const std::filesystem::path& path,
                         const std::vector<std::string>* episode_ids) {
  if (episode_ids && episode_ids->size() != episodes.size())
    throw std::invalid_argument("episode id list does not match episode count");
  std::string out;
  for (size_t e = 0; e < episodes.size(); ++e) {
    const auto& ep = episodes[e];
    nlohmann::json j;
    j["domain_id"] = ep.domain_id;
    if (episode_ids) j["episode_id"] = (*episode_ids)[e];
    j["success"] = ep.success;
    j["strict_success"] = ep.strict_success;
    j["cumulative_reward"] = ep.cumulative_reward;
    nlohmann::json steps = nlohmann::json::array();
    for (const auto& st : ep.steps) {
      nlohmann::json s;
      s["obs"] = std::vector<double>(st.obs.data(), st.obs.data() + st.obs.size());
      s["action"] = std::vector<double>{st.action(0), st.action(1), st.action(2)};
      s["reward"] = st.reward;
      s["done"] = st.done;
      steps.push_back(std::move(s));
    }
    j["steps"] = std::move(steps);
    out += j.dump();
    out += '\n';
  }
  atomic_write_file(path, out);
}

std::vector<EpisodeRecord> load_episodes_jsonl(const std::filesystem::path& path,
                                               std::vector<std::string>* episode_ids) {
  std::istringstream in(read_file(path));
  std::vector<EpisodeRecord> episodes;
  if (episode_ids) episode_ids->clear();
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    auto j = nlohmann::json::parse(line);
    EpisodeRecord ep;
    ep.domain_id = j.at("domain_id").get<std::string>();
    ep.success = j.at("success").get<bool>();
    ep.strict_success = j.at("strict_success").get<bool>();
    ep.cumulative_reward = j.at("cumulative_reward").get<double>();
    for (const auto& s : j.at("steps")) {
      StepRecord st;
      auto obs = s.at("obs").get<std::vector<double>>();
      st.obs = Eigen::Map<Eigen::VectorXd>(obs.data(), static_cast<int>(obs.size()));
      auto act = s.at("action").get<std::vector<double>>();
      if (act.size() != 3) throw std::runtime_error("bad action width in " + path.string());
      st.action = Eigen::Vector3d(act[0], act[1], act[2]);
      st.reward = s.at("reward").get<double>();
      st.done = s.at("done").get<bool>();
      ep.steps.push_back(std::move(st));
    }
    if (episode_ids) episode_ids->push_back(j.value("episode_id", std::string{}));
    episodes.push_back(std::move(ep));
  }
  return episodes;
}

}  // namespace vsdr
