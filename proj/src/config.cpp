#include "vsdr/config.hpp"

#include <cstdio>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

#include "vsdr/io_util.hpp"
#include "vsdr/rng.hpp"
#include "vsdr/sim_validation.hpp"
#include "vsdr/testbed.hpp"

namespace vsdr {

void PipelineConfig::validate() const {
  if (out_dir.empty()) throw std::runtime_error("output directory not set");
  if (jobs < 1) throw std::runtime_error("jobs must be >= 1");
  if (n_train_domains < 1 || n_val_domains < 1)
    throw std::runtime_error("domain set sizes must be positive");
  if (seeds_per_config < 1) throw std::runtime_error("seeds_per_config must be >= 1");
  if (gt_grid < 2 || expert_grid < 2) throw std::runtime_error("grids must be at least 2x2");
  if (n_val_episodes < 1) throw std::runtime_error("n_val_episodes must be >= 1");
  if (validation_types.empty() || metrics.empty() || layers.empty() || components.empty())
    throw std::runtime_error("sweep axes must be non-empty");
  for (const auto& v : validation_types) dr_mode_from(v);
  for (const auto& m : metrics) metric_from(m);
  for (int n : components)
    if (n < 1) throw std::runtime_error("component counts must be positive");
  if (acts_rows < 10) throw std::runtime_error("acts_rows too small");
  if (sparse_k < 1 || sparse_redraws < 1)
    throw std::runtime_error("sparse protocol parameters must be positive");
  if (protocol_components < 1) throw std::runtime_error("protocol_components must be positive");
  if (critic_rollout_episodes < 1) throw std::runtime_error("critic_rollout_episodes must be >= 1");
  em.validate();
}

std::string PipelineConfig::serialized() const {
  auto join = [](const auto& items) {
    std::string s;
    for (const auto& it : items) {
      if (!s.empty()) s += ',';
      if constexpr (std::is_same_v<std::decay_t<decltype(it)>, std::string>)
        s += it;
      else
        s += std::to_string(it);
    }
    return s;
  };
  std::string s;
  s += "preset=" + preset + "\n";
  s += "master_seed=" + std::to_string(master_seed) + "\n";
  s += "jobs=" + std::to_string(jobs) + "\n";
  s += "n_train_domains=" + std::to_string(n_train_domains) + "\n";
  s += "n_val_domains=" + std::to_string(n_val_domains) + "\n";
  s += "out_of_support=" + std::to_string(out_of_support ? 1 : 0) + "\n";
  s += "iterations_full=" + std::to_string(iterations_full) + "\n";
  s += "iterations_short=" + std::to_string(iterations_short) + "\n";
  s += "cem_population=" + std::to_string(cem_population) + "\n";
  s += "cem_elites=" + std::to_string(cem_elites) + "\n";
  s += "cem_eval_episodes=" + std::to_string(cem_eval_episodes) + "\n";
  s += "seeds_per_config=" + std::to_string(seeds_per_config) + "\n";
  s += "dr_config_filter=" + join(dr_config_filter) + "\n";
  s += "gt_grid=" + std::to_string(gt_grid) + "\n";
  s += "expert_grid=" + std::to_string(expert_grid) + "\n";
  s += "n_val_episodes=" + std::to_string(n_val_episodes) + "\n";
  s += "validation_types=" + join(validation_types) + "\n";
  s += "metrics=" + join(metrics) + "\n";
  s += "acts_rows=" + std::to_string(acts_rows) + "\n";
  s += "layers=" + join(layers) + "\n";
  s += "components=" + join(components) + "\n";
  s += "protocol_components=" + std::to_string(protocol_components) + "\n";
  s += "sparse_k=" + std::to_string(sparse_k) + "\n";
  s += "sparse_redraws=" + std::to_string(sparse_redraws) + "\n";
  s += "em=" + em.fingerprint() + "\n";
  s += "critic_rollout_episodes=" + std::to_string(critic_rollout_episodes) + "\n";
  s += "critic=" + std::to_string(critic.population) + "," + std::to_string(critic.elites) + "," +
       std::to_string(critic.iterations) + "," + fmt_double(critic.sigma_init) + "," +
       fmt_double(critic.sigma_floor) + "\n";
  return s;
}

std::string PipelineConfig::fingerprint() const {
  std::string s = serialized();
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a(s.data(), s.size())));
  return buf;
}

PipelineConfig preset_config(const std::string& name) {
  PipelineConfig cfg;
  cfg.preset = name;
  if (name == "paper-analog") {
    return cfg;  // struct defaults are the paper-analog scale
  }
  if (name == "full") {
    cfg.validation_types = {"heavy", "mild", "off"};
    cfg.metrics = {"reward", "success", "strict_success"};
    cfg.components = {1, 2, 3, 5, 10};
    return cfg;
  }
  if (name == "smoke") {
    cfg.dr_config_filter = {"heavy-freq-1", "off"};
    cfg.seeds_per_config = 1;
    cfg.iterations_full = 4;
    cfg.iterations_short = 2;
    cfg.cem_population = 16;
    cfg.cem_elites = 4;
    cfg.cem_eval_episodes = 2;
    cfg.gt_grid = 4;
    cfg.expert_grid = 4;
    cfg.n_val_episodes = 50;
    cfg.validation_types = {"heavy"};
    cfg.metrics = {"success"};
    cfg.acts_rows = 200;
    cfg.layers = {"fc0"};
    cfg.components = {2};
    cfg.sparse_k = 16;
    cfg.sparse_redraws = 2;
    cfg.em.n_restarts = 2;
    cfg.em.max_iters = 100;
    cfg.critic_rollout_episodes = 20;
    cfg.critic.iterations = 8;
    return cfg;
  }
  throw std::runtime_error("unknown preset: " + name);
}

namespace {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<int> split_int_list(const std::string& s) {
  std::vector<int> out;
  for (const auto& item : split_list(s)) out.push_back(std::stoi(item));
  return out;
}

bool parse_bool(const std::string& s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw std::runtime_error("bad boolean value: " + s);
}

}  // namespace

void apply_config_file(PipelineConfig& cfg, const std::filesystem::path& path) {
  std::map<std::string, std::function<void(const std::string&)>> handlers = {
      {"pipeline.preset", [&](const std::string& v) { cfg = preset_config(v); }},
      {"pipeline.seed", [&](const std::string& v) { cfg.master_seed = std::stoull(v); }},
      {"pipeline.out", [&](const std::string& v) { cfg.out_dir = v; }},
      {"pipeline.jobs", [&](const std::string& v) { cfg.jobs = std::stoi(v); }},
      {"domains.n_train", [&](const std::string& v) { cfg.n_train_domains = std::stoi(v); }},
      {"domains.n_val", [&](const std::string& v) { cfg.n_val_domains = std::stoi(v); }},
      {"domains.out_of_support", [&](const std::string& v) { cfg.out_of_support = parse_bool(v); }},
      {"trainer.iterations", [&](const std::string& v) { cfg.iterations_full = std::stoi(v); }},
      {"trainer.iterations_short",
       [&](const std::string& v) { cfg.iterations_short = std::stoi(v); }},
      {"trainer.population", [&](const std::string& v) { cfg.cem_population = std::stoi(v); }},
      {"trainer.elites", [&](const std::string& v) { cfg.cem_elites = std::stoi(v); }},
      {"trainer.eval_episodes",
       [&](const std::string& v) { cfg.cem_eval_episodes = std::stoi(v); }},
      {"trainer.seeds_per_config",
       [&](const std::string& v) { cfg.seeds_per_config = std::stoi(v); }},
      {"trainer.configs", [&](const std::string& v) { cfg.dr_config_filter = split_list(v); }},
      {"gt.grid", [&](const std::string& v) { cfg.gt_grid = std::stoi(v); }},
      {"expert.grid", [&](const std::string& v) { cfg.expert_grid = std::stoi(v); }},
      {"validation.episodes", [&](const std::string& v) { cfg.n_val_episodes = std::stoi(v); }},
      {"validation.types", [&](const std::string& v) { cfg.validation_types = split_list(v); }},
      {"validation.metrics", [&](const std::string& v) { cfg.metrics = split_list(v); }},
      {"ood.rows", [&](const std::string& v) { cfg.acts_rows = std::stoi(v); }},
      {"ood.layers", [&](const std::string& v) { cfg.layers = split_list(v); }},
      {"ood.components", [&](const std::string& v) { cfg.components = split_int_list(v); }},
      {"ood.protocol_components",
       [&](const std::string& v) { cfg.protocol_components = std::stoi(v); }},
      {"ood.sparse_k", [&](const std::string& v) { cfg.sparse_k = std::stoi(v); }},
      {"ood.sparse_redraws", [&](const std::string& v) { cfg.sparse_redraws = std::stoi(v); }},
      {"em.max_iters", [&](const std::string& v) { cfg.em.max_iters = std::stoi(v); }},
      {"em.tol", [&](const std::string& v) { cfg.em.tol = std::stod(v); }},
      {"em.restarts", [&](const std::string& v) { cfg.em.n_restarts = std::stoi(v); }},
      {"em.variance_floor", [&](const std::string& v) { cfg.em.variance_floor = std::stod(v); }},
      {"critic.rollouts",
       [&](const std::string& v) { cfg.critic_rollout_episodes = std::stoi(v); }},
      {"critic.population", [&](const std::string& v) { cfg.critic.population = std::stoi(v); }},
      {"critic.elites", [&](const std::string& v) { cfg.critic.elites = std::stoi(v); }},
      {"critic.iterations", [&](const std::string& v) { cfg.critic.iterations = std::stoi(v); }},
  };

  std::istringstream in(read_file(path));
  std::string line, section = "pipeline";
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[' && t.back() == ']') {
      section = trim(t.substr(1, t.size() - 2));
      continue;
    }
    auto eq = t.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                               ": expected key=value");
    std::string key = section + "." + trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    auto it = handlers.find(key);
    if (it == handlers.end())
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                               ": unknown option " + key);
    it->second(value);
  }
}

}  // namespace vsdr
