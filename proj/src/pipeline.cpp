#include "vsdr/pipeline.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <iostream>
#include <json.hpp>
#include <limits>
#include <map>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <utility>

#include "vsdr/baselines.hpp"
#include "vsdr/io_util.hpp"
#include "vsdr/real_probe.hpp"
#include "vsdr/rollout.hpp"
#include "vsdr/rng.hpp"
#include "vsdr/sim_validation.hpp"
#include "vsdr/trainer.hpp"

namespace vsdr {

namespace {

using nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void parallel_for(int n, int jobs, const std::function<void(int)>& fn) {
  if (jobs <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::mutex err_mutex;
  std::exception_ptr first_error;
  std::vector<std::thread> workers;
  int n_threads = std::min(jobs, n);
  for (int t = 0; t < n_threads; ++t) {
    workers.emplace_back([&] {
      for (;;) {
        int i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mutex);
          if (!first_error) first_error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& w : workers) w.join();
  if (first_error) std::rethrow_exception(first_error);
}

OutPaths out_paths(const PipelineConfig& cfg) { return OutPaths{fs::path(cfg.out_dir)}; }

PopulationOptions population_options(const PipelineConfig& cfg) {
  PopulationOptions opts;
  opts.iterations_full = cfg.iterations_full;
  opts.iterations_short = cfg.iterations_short;
  opts.population = cfg.cem_population;
  opts.elites = cfg.cem_elites;
  opts.eval_episodes = cfg.cem_eval_episodes;
  opts.seeds_per_config = cfg.seeds_per_config;
  opts.config_filter = cfg.dr_config_filter;
  return opts;
}

std::vector<std::string> population_ids(const PipelineConfig& cfg) {
  std::vector<std::string> ids;
  for (const auto& tc : preset_population(cfg.master_seed, population_options(cfg)))
    ids.push_back(tc.policy_id);
  return ids;
}

// Component counts to fit: the sweep axis plus the pinned protocol-axis count.
std::vector<int> component_counts(const PipelineConfig& cfg) {
  std::vector<int> ns = cfg.components;
  ns.push_back(cfg.protocol_components);
  std::sort(ns.begin(), ns.end());
  ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
  return ns;
}

DRConfig suite_config(const std::string& name) {
  for (const auto& c : default_dr_suite())
    if (c.name == name) return c;
  throw std::invalid_argument("unknown DR config: " + name);
}

std::vector<std::string> load_policy_index(const OutPaths& paths) {
  json j = json::parse(read_file(paths.policy_index()));
  std::vector<std::string> ids;
  for (const auto& v : j.at("policies")) ids.push_back(v.get<std::string>());
  if (ids.empty()) throw std::runtime_error("policy index is empty");
  return ids;
}

std::vector<MlpPolicy> load_policies(const OutPaths& paths) {
  std::vector<MlpPolicy> policies;
  for (const auto& id : load_policy_index(paths))
    policies.push_back(load_policy(paths.policy_manifest(id)));
  return policies;
}

std::vector<DomainParams> domains_for_type(const DomainSets& sets, const std::string& vt) {
  if (vt == "heavy") return sets.validation;
  if (vt == "mild") return sets.validation_mild;
  if (vt == "off") return {default_nominal()};
  throw std::invalid_argument("unknown validation type: " + vt);
}

double json_double(const json& v) { return v.is_null() ? kNaN : v.get<double>(); }

uint64_t em_seed(const PipelineConfig& cfg, const std::string& pid, const std::string& layer,
                 int n) {
  return derive_seed(derive_seed(cfg.master_seed, "em", pid), layer, static_cast<uint64_t>(n));
}

std::vector<ScoreTable> load_tables(const PipelineConfig& cfg, const OutPaths& paths) {
  std::vector<ScoreTable> tables;
  for (const auto& cell : enumerate_cells(cfg))
    tables.push_back(load_score_table(paths.score_table(cell), cell));
  return tables;
}

// Ground-truth metric values reordered to match a score table's policy rows.
Eigen::VectorXd aligned_metric(const GroundTruth& gt, const std::vector<std::string>& ids,
                               Metric m) {
  std::map<std::string, int> pos;
  for (int i = 0; i < static_cast<int>(gt.policy_ids.size()); ++i) pos[gt.policy_ids[i]] = i;
  const Eigen::VectorXd& values = gt.metric(m);
  Eigen::VectorXd out(static_cast<int>(ids.size()));
  for (int i = 0; i < static_cast<int>(ids.size()); ++i) {
    auto it = pos.find(ids[i]);
    if (it == pos.end()) throw std::runtime_error("policy missing from ground truth: " + ids[i]);
    out[i] = values[it->second];
  }
  return out;
}

// Trailing seed index of a population id ("heavy-freq-1-s2" -> 2).
int seed_index_of(const std::string& id) {
  auto pos = id.rfind("-s");
  if (pos == std::string::npos) return 0;
  try {
    return std::stoi(id.substr(pos + 2));
  } catch (...) {
    return 0;
  }
}

std::string config_name_of(const std::string& id) {
  auto pos = id.rfind("-s");
  return pos == std::string::npos ? id : id.substr(0, pos);
}

std::string box_csv_fields(const BoxSummary& b) {
  return fmt_double(b.min) + "," + fmt_double(b.q1) + "," + fmt_double(b.median) + "," +
         fmt_double(b.q3) + "," + fmt_double(b.max) + "," + std::to_string(b.count);
}

}  // namespace

std::vector<ScoreCell> enumerate_cells(const PipelineConfig& cfg) {
  std::vector<ScoreCell> cells;
  for (const auto& vt : cfg.validation_types)
    for (const auto& metric : cfg.metrics)
      for (const auto& layer : cfg.layers)
        for (int n : cfg.components) cells.push_back({vt, metric, layer, n, "expert"});
  for (const auto& vt : cfg.validation_types)
    for (const auto& metric : cfg.metrics)
      for (const auto& layer : cfg.layers)
        for (const auto& proto : {std::string("sparse_expert"), std::string("initial")})
          cells.push_back({vt, metric, layer, cfg.protocol_components, proto});
  return cells;
}

void stage_gen_domains(const PipelineConfig& cfg) {
  OutPaths paths = out_paths(cfg);
  DomainSets sets = make_domain_sets(derive_seed(cfg.master_seed, "domains"), cfg.out_of_support,
                                     cfg.n_train_domains, cfg.n_val_domains);
  save_domain_sets(sets, paths.domains());
}

void stage_train(const PipelineConfig& cfg) {
  OutPaths paths = out_paths(cfg);
  auto tcfgs = preset_population(cfg.master_seed, population_options(cfg));
  if (tcfgs.empty()) throw std::runtime_error("DR config filter matched nothing");
  auto policies = train_population(tcfgs, cfg.jobs);
  ensure_dir(paths.policies_dir());
  json index;
  index["policies"] = json::array();
  for (const auto& p : policies) {
    save_policy(p, paths.policies_dir());
    index["policies"].push_back(p.id);
  }
  atomic_write_file(paths.policy_index(), index.dump(2) + "\n");
}

void stage_gt_eval(const PipelineConfig& cfg) {
  OutPaths paths = out_paths(cfg);
  auto policies = load_policies(paths);
  DomainSets sets = load_domain_sets(paths.domains());
  std::vector<EpisodeRecord> episodes;
  std::vector<std::string> episode_ids;
  GroundTruth run1 = ground_truth_eval(policies, sets.real, cfg.gt_grid, 1,
                                       derive_seed(cfg.master_seed, "gt-run", uint64_t{1}),
                                       &episodes, &episode_ids);
  GroundTruth run2 = ground_truth_eval(policies, sets.real, cfg.gt_grid, 2,
                                       derive_seed(cfg.master_seed, "gt-run", uint64_t{2}));
  save_ground_truth(run1, paths.gt_run(1));
  save_ground_truth(run2, paths.gt_run(2));
  save_episodes_jsonl(episodes, paths.gt_episodes(), &episode_ids);
}

void stage_expert_data(const PipelineConfig& cfg) {
  OutPaths paths = out_paths(cfg);
  DomainSets sets = load_domain_sets(paths.domains());
  Controller expert = expert_controller();
  std::vector<EpisodeRecord> episodes;
  auto inits = grid_inits(cfg.expert_grid);
  for (int g = 0; g < static_cast<int>(inits.size()); ++g) {
    uint64_t noise_seed = derive_seed(cfg.master_seed, "expert-noise", static_cast<uint64_t>(g));
    episodes.push_back(roll_episode_fixed(expert, sets.real, inits[g], noise_seed));
  }
  save_episodes_jsonl(episodes, paths.expert_episodes());
}

void stage_validate(const PipelineConfig& cfg) {
  OutPaths paths = out_paths(cfg);
  DomainSets sets = load_domain_sets(paths.domains());
  auto ids = load_policy_index(paths);
  json out = json::object();
  for (const auto& id : ids) {
    MlpPolicy policy = load_policy(paths.policy_manifest(id));
    json per_type = json::object();
    for (const auto& vt : cfg.validation_types) {
      auto domains = domains_for_type(sets, vt);
      auto vals = validate_all(policy, domains, cfg.n_val_episodes,
                               derive_seed(cfg.master_seed, "validate", vt));
      per_type[vt] = {{"reward", vals[0]}, {"success", vals[1]}, {"strict_success", vals[2]}};
    }
    out[id] = per_type;
  }
  atomic_write_file(paths.validation_scores(), out.dump(2) + "\n");
}

void stage_collect_acts(const PipelineConfig& cfg) {
  OutPaths paths = out_paths(cfg);
  auto ids = load_policy_index(paths);
  for (const auto& id : ids) {
    MlpPolicy policy = load_policy(paths.policy_manifest(id));
    DRConfig dr = suite_config(policy.dr_config);
    auto bundle = collect_all_activations(policy, dr, cfg.acts_rows,
                                          derive_seed(cfg.master_seed, "acts", id));
    for (const auto& layer : cfg.layers) {
      auto it = bundle.find(layer);
      if (it == bundle.end()) throw std::runtime_error("no such layer tap: " + layer);
      save_activation_dataset(it->second, paths.acts_file(id, layer));
    }
  }
}

void stage_fit_gmms(const PipelineConfig& cfg) {
  OutPaths paths = out_paths(cfg);
  auto ids = load_policy_index(paths);
  auto ns = component_counts(cfg);
  struct Task {
    std::string pid, layer;
    int n;
  };
  std::vector<Task> tasks;
  for (const auto& id : ids)
    for (const auto& layer : cfg.layers)
      for (int n : ns) tasks.push_back({id, layer, n});
  parallel_for(static_cast<int>(tasks.size()), cfg.jobs, [&](int i) {
    const Task& t = tasks[i];
    EmConfig em = cfg.em;
    em.rng_seed = em_seed(cfg, t.pid, t.layer, t.n);
    try {
      fit_gmm_cached(paths.acts_file(t.pid, t.layer), t.n, em,
                     paths.gmm_file(t.pid, t.layer, t.n));
    } catch (const std::exception& e) {
      throw std::runtime_error(t.pid + "/" + t.layer + "/n=" + std::to_string(t.n) + ": " +
                               e.what());
    }
  });
}

void stage_ood_scores(const PipelineConfig& cfg) {
  OutPaths paths = out_paths(cfg);
  auto ids = load_policy_index(paths);
  auto ns = component_counts(cfg);
  auto episodes = load_episodes_jsonl(paths.expert_episodes());

  Eigen::MatrixXd expert_obs = collect_protocol(episodes, Protocol::expert, 0, 0);
  Eigen::MatrixXd initial_obs = collect_protocol(episodes, Protocol::initial, 0, 0);
  std::vector<Eigen::MatrixXd> sparse_obs;
  for (int i = 0; i < cfg.sparse_redraws; ++i)
    sparse_obs.push_back(collect_protocol(
        episodes, Protocol::sparse_expert, cfg.sparse_k,
        derive_seed(cfg.master_seed, "sparse-redraw", static_cast<uint64_t>(i))));

  json out = json::object();
  for (const auto& id : ids) {
    MlpPolicy policy = load_policy(paths.policy_manifest(id));
    auto taps_expert = batch_taps(policy, expert_obs);
    auto taps_initial = batch_taps(policy, initial_obs);
    std::vector<std::map<std::string, Eigen::MatrixXd>> taps_sparse;
    for (const auto& obs : sparse_obs) taps_sparse.push_back(batch_taps(policy, obs));

    json per_layer = json::object();
    for (const auto& layer : cfg.layers) {
      ActivationDataset train_acts = load_activation_dataset(paths.acts_file(id, layer));
      json per_n = json::object();
      for (int n : ns) {
        EmConfig em = cfg.em;
        em.rng_seed = em_seed(cfg, id, layer, n);
        Gmm gmm = fit_gmm_cached(paths.acts_file(id, layer), n, em, paths.gmm_file(id, layer, n));
        json entry;
        entry["train_ll"] = mean_log_likelihood(gmm, train_acts);
        entry["expert"] = log_likelihood_rows(gmm, taps_expert.at(layer)).mean();
        entry["sparse"] = log_likelihood_rows(gmm, taps_sparse.at(0).at(layer)).mean();
        entry["initial"] = log_likelihood_rows(gmm, taps_initial.at(layer)).mean();
        if (n == cfg.protocol_components) {
          json redraws = json::array();
          for (const auto& taps : taps_sparse)
            redraws.push_back(log_likelihood_rows(gmm, taps.at(layer)).mean());
          entry["redraws"] = redraws;
        }
        per_n[std::to_string(n)] = entry;
      }
      per_layer[layer] = per_n;
    }
    out[id] = per_layer;
  }
  atomic_write_file(paths.ood_scores(), out.dump(2) + "\n");
}

void stage_baselines(const PipelineConfig& cfg) {
  OutPaths paths = out_paths(cfg);
  auto ids = load_policy_index(paths);
  std::vector<std::string> episode_ids;
  auto episodes = load_episodes_jsonl(paths.gt_episodes(), &episode_ids);
  LabeledTransitionSet labeled = build_labeled_set(episodes, episode_ids);
  save_labeled_set(labeled, paths.labeled_set());

  bool has_success = false, has_failure = false;
  for (int label : labeled.labels) (label ? has_success : has_failure) = true;
  if (!has_success || !has_failure)
    std::cerr << "warning: ground-truth transitions are single-class; "
                 "classifier baselines will be NaN\n";

  json scores = json::object();
  for (const auto& id : ids) {
    MlpPolicy policy = load_policy(paths.policy_manifest(id));
    DRConfig dr = suite_config(policy.dr_config);
    Controller controller = policy_controller(policy);
    uint64_t base = derive_seed(cfg.master_seed, "critic-roll", id);
    std::vector<EpisodeRecord> rollouts;
    for (int e = 0; e < cfg.critic_rollout_episodes; ++e) {
      Rng init_rng(derive_seed(base, "init", static_cast<uint64_t>(e)));
      State init = sample_init(init_rng);
      rollouts.push_back(roll_episode_dr(controller, dr, init,
                                         derive_seed(base, "dom", static_cast<uint64_t>(e)),
                                         derive_seed(base, "noise", static_cast<uint64_t>(e))));
    }
    Critic critic =
        fit_critic(policy, rollouts, derive_seed(cfg.master_seed, "critic-fit", id), cfg.critic);
    save_critic(critic, paths.critic_file(id));
    double opc_score = kNaN, soft_score = kNaN;
    if (has_success && has_failure) {
      opc_score = opc(critic, labeled);
      soft_score = soft_opc(critic, labeled);
    }
    scores[id] = {{"opc", opc_score}, {"soft_opc", soft_score}, {"fit_loss", critic.fit_loss}};
  }
  atomic_write_file(paths.baseline_scores(), scores.dump(2) + "\n");
}

void stage_combine(const PipelineConfig& cfg) {
  OutPaths paths = out_paths(cfg);
  auto ids = load_policy_index(paths);
  json val = json::parse(read_file(paths.validation_scores()));
  json ood = json::parse(read_file(paths.ood_scores()));
  json base = json::parse(read_file(paths.baseline_scores()));

  int n_policies = static_cast<int>(ids.size());
  Eigen::VectorXd opc_v(n_policies), soft_v(n_policies);
  for (int i = 0; i < n_policies; ++i) {
    const json& b = base.at(ids[i]);
    opc_v[i] = json_double(b.at("opc"));
    soft_v[i] = json_double(b.at("soft_opc"));
  }

  for (const auto& cell : enumerate_cells(cfg)) {
    std::string proto_field = cell.protocol == "expert"          ? "expert"
                              : cell.protocol == "sparse_expert" ? "sparse"
                                                                 : "initial";
    Eigen::VectorXd s(n_policies), r(n_policies);
    for (int i = 0; i < n_policies; ++i) {
      try {
        s[i] = val.at(ids[i]).at(cell.validation_type).at(cell.metric).get<double>();
        r[i] = ood.at(ids[i])
                   .at(cell.layer)
                   .at(std::to_string(cell.n_components))
                   .at(proto_field)
                   .get<double>();
      } catch (const json::exception& e) {
        throw std::runtime_error("cell " + cell.key() + ", policy " + ids[i] + ": " + e.what());
      }
    }
    ScoreTable table = make_score_table(cell, ids, s, r, opc_v, soft_v);
    save_score_table(table, paths.score_table(cell));
  }
}

void stage_report(const PipelineConfig& cfg) {
  OutPaths paths = out_paths(cfg);
  auto tables = load_tables(cfg, paths);
  GroundTruth gt1 = load_ground_truth(paths.gt_run(1));
  GroundTruth gt2 = load_ground_truth(paths.gt_run(2));
  fs::path dir = paths.report_dir();
  ensure_dir(dir);

  RankingReport report = sweep_report(tables, gt1, gt2);

  std::string rank_csv = "validation_type,metric,layer,n_components,protocol,method,rho\n";
  for (const auto& cell_result : report.cells) {
    const ScoreCell& c = cell_result.cell;
    std::string prefix = c.validation_type + "," + c.metric + "," + c.layer + "," +
                         std::to_string(c.n_components) + "," + c.protocol + ",";
    for (const auto& method : kMethods) {
      auto rho = cell_result.rho.at(method);
      rank_csv += prefix + method + "," + (rho ? fmt_double(*rho) : "NA") + "\n";
    }
  }
  atomic_write_file(dir / "ranking_report.csv", rank_csv);

  std::string agg_csv = "name,value\n";
  for (const auto& [name, value] : report.aggregates)
    agg_csv += name + "," + (std::isnan(value) ? "NA" : fmt_double(value)) + "\n";
  atomic_write_file(dir / "aggregates.csv", agg_csv);

  std::string box_csv = "group,min,q1,median,q3,max,count\n";
  for (const auto& [group, box] : report.boxes)
    box_csv += group + "," + box_csv_fields(box) + "\n";
  atomic_write_file(dir / "boxplots.csv", box_csv);

  std::string proto_csv = "protocol,min,q1,median,q3,max,count\n";
  for (const auto& [proto, box] : protocol_comparison(tables, gt1, cfg.protocol_components))
    proto_csv += proto + "," + box_csv_fields(box) + "\n";
  atomic_write_file(dir / "protocol_comparison.csv", proto_csv);

  // Redraw stability: vsdr rho per sparse redraw at the pinned component count.
  json val = json::parse(read_file(paths.validation_scores()));
  json ood = json::parse(read_file(paths.ood_scores()));
  auto ids = load_policy_index(paths);
  int n_policies = static_cast<int>(ids.size());
  std::string stab_csv =
      "validation_type,metric,layer,n_components,redraws,defined,rho_mean,rho_std\n";
  for (const auto& vt : cfg.validation_types)
    for (const auto& metric : cfg.metrics)
      for (const auto& layer : cfg.layers) {
        Eigen::VectorXd s(n_policies);
        for (int i = 0; i < n_policies; ++i)
          s[i] = val.at(ids[i]).at(vt).at(metric).get<double>();
        Eigen::VectorXd truth = aligned_metric(gt1, ids, metric_from(metric));
        std::vector<double> rhos;
        for (int d = 0; d < cfg.sparse_redraws; ++d) {
          Eigen::VectorXd r(n_policies);
          for (int i = 0; i < n_policies; ++i)
            r[i] = ood.at(ids[i])
                       .at(layer)
                       .at(std::to_string(cfg.protocol_components))
                       .at("redraws")
                       .at(d)
                       .get<double>();
          auto rho = spearman(vsdr_scores(s, r), truth);
          if (rho) rhos.push_back(*rho);
        }
        std::string row = vt + "," + metric + "," + layer + "," +
                          std::to_string(cfg.protocol_components) + "," +
                          std::to_string(cfg.sparse_redraws) + "," +
                          std::to_string(rhos.size()) + ",";
        if (rhos.empty()) {
          row += "NA,NA";
        } else {
          double mean = 0;
          for (double x : rhos) mean += x;
          mean /= static_cast<double>(rhos.size());
          double var = 0;
          for (double x : rhos) var += (x - mean) * (x - mean);
          var /= static_cast<double>(rhos.size());
          row += fmt_double(mean) + "," + fmt_double(std::sqrt(var));
        }
        stab_csv += row + "\n";
      }
  atomic_write_file(dir / "sparse_stability.csv", stab_csv);

  // Population-subset ablation: rho over progressively less diverse populations.
  std::vector<std::string> seeds2, seeds1, distinct;
  const std::vector<std::string> combo_configs = {"wide-gain-bias", "wide-gain-noise",
                                                  "wide-bias-noise", "wide-all"};
  for (const auto& id : ids) {
    int k = seed_index_of(id);
    std::string cname = config_name_of(id);
    if (k < 2) seeds2.push_back(id);
    if (k < 1) {
      seeds1.push_back(id);
      if (std::find(combo_configs.begin(), combo_configs.end(), cname) == combo_configs.end())
        distinct.push_back(id);
    }
  }
  std::vector<std::pair<std::string, std::vector<std::string>>> subsets = {
      {"full", ids}, {"seeds-2", seeds2}, {"seeds-1", seeds1}, {"distinct-types", distinct}};
  std::vector<ScoreTable> expert_tables;
  for (const auto& t : tables)
    if (t.cell.protocol == "expert") expert_tables.push_back(t);
  std::string sep_csv = "subset,n_policies,min,q1,median,q3,max,count\n";
  for (const auto& summary : separability_analysis(expert_tables, gt1, subsets)) {
    sep_csv += summary.name + "," + std::to_string(summary.n_policies) + ",";
    sep_csv += summary.box ? box_csv_fields(*summary.box) : std::string("NA,NA,NA,NA,NA,0");
    sep_csv += "\n";
  }
  atomic_write_file(dir / "separability.csv", sep_csv);
}

PipelineResult run_pipeline(const PipelineConfig& cfg) {
  cfg.validate();
  OutPaths paths = out_paths(cfg);
  ensure_dir(paths.root);
  const std::string fingerprint = cfg.fingerprint();

  json state = json::object();
  if (file_exists(paths.state_file())) {
    try {
      state = json::parse(read_file(paths.state_file()));
      if (!state.is_object()) state = json::object();
    } catch (...) {
      state = json::object();
    }
  }

  auto ids = population_ids(cfg);
  auto ns = component_counts(cfg);

  auto run_stage = [&](const std::string& name, const std::vector<fs::path>& outputs,
                       void (*fn)(const PipelineConfig&)) {
    bool done = state.contains(name) && state[name] == fingerprint;
    if (done)
      for (const auto& p : outputs)
        if (!file_exists(p)) {
          done = false;
          break;
        }
    if (done) {
      std::cerr << "[pipeline] " << name << ": cached\n";
      return;
    }
    auto start = std::chrono::steady_clock::now();
    try {
      fn(cfg);
    } catch (const std::exception& e) {
      throw std::runtime_error(name + ": " + e.what());
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cerr << "[pipeline] " << name << ": done in " << secs << "s\n";
    state[name] = fingerprint;
    atomic_write_file(paths.state_file(), state.dump(2) + "\n");
  };

  std::vector<fs::path> policy_files = {paths.policy_index()};
  for (const auto& id : ids) policy_files.push_back(paths.policy_manifest(id));
  std::vector<fs::path> acts_files, gmm_files;
  for (const auto& id : ids)
    for (const auto& layer : cfg.layers) {
      acts_files.push_back(paths.acts_file(id, layer));
      for (int n : ns) gmm_files.push_back(paths.gmm_file(id, layer, n));
    }
  std::vector<fs::path> baseline_files = {paths.labeled_set(), paths.baseline_scores()};
  for (const auto& id : ids) baseline_files.push_back(paths.critic_file(id));
  std::vector<fs::path> table_files;
  for (const auto& cell : enumerate_cells(cfg)) table_files.push_back(paths.score_table(cell));
  std::vector<fs::path> report_files;
  for (const char* name : {"ranking_report.csv", "aggregates.csv", "boxplots.csv",
                           "protocol_comparison.csv", "sparse_stability.csv", "separability.csv"})
    report_files.push_back(paths.report_dir() / name);

  run_stage("gen-domains", {paths.domains()}, &stage_gen_domains);
  run_stage("train", policy_files, &stage_train);
  run_stage("gt-eval", {paths.gt_run(1), paths.gt_run(2), paths.gt_episodes()}, &stage_gt_eval);
  run_stage("expert-data", {paths.expert_episodes()}, &stage_expert_data);
  run_stage("validate", {paths.validation_scores()}, &stage_validate);
  run_stage("collect-acts", acts_files, &stage_collect_acts);
  run_stage("fit-gmms", gmm_files, &stage_fit_gmms);
  run_stage("ood-scores", {paths.ood_scores()}, &stage_ood_scores);
  run_stage("baselines", baseline_files, &stage_baselines);
  run_stage("combine", table_files, &stage_combine);
  run_stage("report", report_files, &stage_report);

  PipelineResult result;
  result.out_dir = paths.root;
  result.tables = load_tables(cfg, paths);
  result.report = sweep_report(result.tables, load_ground_truth(paths.gt_run(1)),
                               load_ground_truth(paths.gt_run(2)));
  return result;
}

}  // namespace vsdr
