#include "vsdr/rank_eval.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <stdexcept>

#include "vsdr/io_util.hpp"
#include "vsdr/rollout.hpp"

namespace vsdr {

Eigen::VectorXd rank_with_ties(const Eigen::VectorXd& scores) {
  int n = static_cast<int>(scores.size());
  if (!scores.allFinite()) throw std::invalid_argument("cannot rank non-finite scores");
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return scores(a) > scores(b); });
  Eigen::VectorXd ranks(n);
  int i = 0;
  while (i < n) {
    int j = i;
    while (j + 1 < n && scores(order[j + 1]) == scores(order[i])) ++j;
    double avg = 0.5 * (i + j) + 1.0;  // mean of 1-based positions i+1 .. j+1
    for (int k = i; k <= j; ++k) ranks(order[k]) = avg;
    i = j + 1;
  }
  return ranks;
}

std::optional<double> spearman(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) throw std::invalid_argument("spearman length mismatch");
  if (a.size() < 2) return std::nullopt;  // a single entry is degenerate, like a constant
  Eigen::VectorXd ra = rank_with_ties(a);
  Eigen::VectorXd rb = rank_with_ties(b);
  Eigen::VectorXd da = ra.array() - ra.mean();
  Eigen::VectorXd db = rb.array() - rb.mean();
  double va = da.squaredNorm();
  double vb = db.squaredNorm();
  if (va == 0.0 || vb == 0.0) return std::nullopt;
  return da.dot(db) / std::sqrt(va * vb);
}

const Eigen::VectorXd& GroundTruth::metric(Metric m) const {
  switch (m) {
    case Metric::reward: return reward;
    case Metric::success: return success;
    case Metric::strict_success: return strict;
  }
  throw std::invalid_argument("bad metric");
}

void GroundTruth::validate() const {
  int n = static_cast<int>(policy_ids.size());
  if (n == 0) throw std::invalid_argument("ground truth has no policies");
  if (reward.size() != n || success.size() != n || strict.size() != n)
    throw std::invalid_argument("ground truth column length mismatch");
  for (int i = 0; i < n; ++i)
    if (strict(i) > success(i) + 1e-12)
      throw std::invalid_argument("strict-success rate exceeds success rate for " + policy_ids[i]);
}

GroundTruth ground_truth_eval(const std::vector<MlpPolicy>& policies, const DomainParams& real,
                              int grid_n, int run_id, uint64_t seed,
                              std::vector<EpisodeRecord>* episodes_out,
                              std::vector<std::string>* episode_ids_out) {
  if (policies.empty()) throw std::invalid_argument("no policies to evaluate");
  auto inits = grid_inits(grid_n);
  GroundTruth gt;
  gt.run_id = run_id;
  int n = static_cast<int>(policies.size());
  gt.reward.resize(n);
  gt.success.resize(n);
  gt.strict.resize(n);
  for (int p = 0; p < n; ++p) {
    const auto& policy = policies[p];
    gt.policy_ids.push_back(policy.id);
    Controller controller = policy_controller(policy);
    double rew = 0, succ = 0, strict = 0;
    for (size_t g = 0; g < inits.size(); ++g) {
      uint64_t noise_seed =
          derive_seed(derive_seed(seed, "gt-noise", static_cast<uint64_t>(g)), policy.id);
      EpisodeRecord ep = roll_episode_fixed(controller, real, inits[g], noise_seed);
      MetricValues mv = evaluate_metrics(ep);
      rew += mv.reward;
      succ += mv.success ? 1 : 0;
      strict += mv.strict_success ? 1 : 0;
      if (episodes_out) {
        episodes_out->push_back(std::move(ep));
        if (episode_ids_out)
          episode_ids_out->push_back(policy.id + "-run" + std::to_string(run_id) + "-ep" +
                                     std::to_string(g));
      }
    }
    double m = static_cast<double>(inits.size());
    gt.reward(p) = rew / m;
    gt.success(p) = succ / m;
    gt.strict(p) = strict / m;
  }
  gt.validate();
  return gt;
}

void save_ground_truth(const GroundTruth& gt, const std::filesystem::path& path) {
  gt.validate();
  nlohmann::json j;
  j["run_id"] = gt.run_id;
  nlohmann::json rows = nlohmann::json::array();
  for (size_t i = 0; i < gt.policy_ids.size(); ++i) {
    nlohmann::json r;
    r["id"] = gt.policy_ids[i];
    r["reward"] = gt.reward(static_cast<int>(i));
    r["success"] = gt.success(static_cast<int>(i));
    r["strict_success"] = gt.strict(static_cast<int>(i));
    rows.push_back(std::move(r));
  }
  j["policies"] = std::move(rows);
  atomic_write_file(path, j.dump(2) + "\n");
}

GroundTruth load_ground_truth(const std::filesystem::path& path) {
  auto j = nlohmann::json::parse(read_file(path));
  GroundTruth gt;
  gt.run_id = j.at("run_id").get<int>();
  const auto& rows = j.at("policies");
  int n = static_cast<int>(rows.size());
  gt.reward.resize(n);
  gt.success.resize(n);
  gt.strict.resize(n);
  int i = 0;
  for (const auto& r : rows) {
    gt.policy_ids.push_back(r.at("id").get<std::string>());
    gt.reward(i) = r.at("reward").get<double>();
    gt.success(i) = r.at("success").get<double>();
    gt.strict(i) = r.at("strict_success").get<double>();
    ++i;
  }
  gt.validate();
  return gt;
}

BoxSummary box_summary(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("box summary of an empty set");
  std::sort(values.begin(), values.end());
  auto quantile = [&](double p) {
    double h = (values.size() - 1) * p;
    size_t lo = static_cast<size_t>(h);
    if (lo + 1 >= values.size()) return values.back();
    return values[lo] + (h - lo) * (values[lo + 1] - values[lo]);
  };
  BoxSummary b;
  b.min = values.front();
  b.q1 = quantile(0.25);
  b.median = quantile(0.5);
  b.q3 = quantile(0.75);
  b.max = values.back();
  b.count = static_cast<int>(values.size());
  return b;
}

namespace {

Eigen::VectorXd gt_vector_for(const ScoreTable& table, const GroundTruth& gt) {
  std::map<std::string, int> index;
  for (size_t i = 0; i < gt.policy_ids.size(); ++i) index[gt.policy_ids[i]] = static_cast<int>(i);
  const Eigen::VectorXd& col = gt.metric(metric_from(table.cell.metric));
  Eigen::VectorXd v(table.rows());
  for (int i = 0; i < table.rows(); ++i) {
    auto it = index.find(table.policy_ids[i]);
    if (it == index.end())
      throw std::invalid_argument("policy " + table.policy_ids[i] + " missing from ground truth");
    v(i) = col(it->second);
  }
  return v;
}

}  // namespace

CellResult eval_cell(const ScoreTable& table, const GroundTruth& gt) {
  Eigen::VectorXd gtv = gt_vector_for(table, gt);
  CellResult res;
  res.cell = table.cell;
  res.rho["sim_only"] = spearman(table.s, gtv);
  res.rho["ood_only"] = spearman(table.r, gtv);
  res.rho["vsdr"] = spearman(table.vsdr, gtv);
  if (table.opc.allFinite() && table.soft_opc.allFinite()) {
    res.rho["opc"] = spearman(table.opc, gtv);
    res.rho["soft_opc"] = spearman(table.soft_opc, gtv);
    res.rho["sim_opc"] = spearman(combine_generic(table.s, table.opc), gtv);
    res.rho["sim_soft_opc"] = spearman(combine_generic(table.s, table.soft_opc), gtv);
  } else {
    for (const auto& m : {"opc", "soft_opc", "sim_opc", "sim_soft_opc"})
      res.rho[m] = std::nullopt;
  }
  return res;
}

RankingReport sweep_report(const std::vector<ScoreTable>& tables, const GroundTruth& gt,
                           const GroundTruth& gt2) {
  if (tables.empty()) throw std::invalid_argument("no score tables to report on");
  RankingReport rep;
  for (const auto& t : tables) rep.cells.push_back(eval_cell(t, gt));

  auto defined = [](const std::optional<double>& v) { return v.has_value(); };

  // Win rates and distribution statistics cover the expert-protocol sweep.
  std::vector<const CellResult*> expert_cells;
  for (const auto& c : rep.cells)
    if (c.cell.protocol == "expert") expert_cells.push_back(&c);

  for (const auto& method : kMethods) {
    if (method == "vsdr") continue;
    int wins = 0, comparable = 0;
    for (const auto* c : expert_cells) {
      const auto& v = c->rho.at("vsdr");
      const auto& m = c->rho.at(method);
      if (!defined(v) || !defined(m)) continue;
      ++comparable;
      if (*v > *m) ++wins;  // strict improvement only
    }
    rep.aggregates["win_rate_vsdr_vs_" + method] =
        comparable ? static_cast<double>(wins) / comparable
                   : std::numeric_limits<double>::quiet_NaN();
  }

  for (const auto& method : kMethods) {
    std::vector<double> vals;
    for (const auto* c : expert_cells)
      if (defined(c->rho.at(method))) vals.push_back(*c->rho.at(method));
    rep.aggregates["mean_rho_" + method] =
        vals.empty() ? std::numeric_limits<double>::quiet_NaN()
                     : std::accumulate(vals.begin(), vals.end(), 0.0) / vals.size();
  }

  // Per-axis breakdowns of the vsdr correlation and its gain over sim-only.
  auto axis_value = [](const ScoreCell& cell, const std::string& axis) {
    if (axis == "layer") return cell.layer;
    if (axis == "n") return std::to_string(cell.n_components);
    return cell.validation_type;
  };
  for (const std::string axis : {"layer", "n", "valtype"}) {
    std::map<std::string, std::vector<double>> rho_groups, gain_groups;
    for (const auto* c : expert_cells) {
      std::string key = axis_value(c->cell, axis);
      if (defined(c->rho.at("vsdr"))) rho_groups[key].push_back(*c->rho.at("vsdr"));
      if (defined(c->rho.at("vsdr")) && defined(c->rho.at("sim_only")))
        gain_groups[key].push_back(*c->rho.at("vsdr") - *c->rho.at("sim_only"));
    }
    for (const auto& [key, vals] : rho_groups)
      rep.aggregates["mean_vsdr_rho_by_" + axis + "_" + key] =
          std::accumulate(vals.begin(), vals.end(), 0.0) / vals.size();
    for (const auto& [key, vals] : gain_groups)
      rep.aggregates["mean_gain_vs_sim_only_by_" + axis + "_" + key] =
          std::accumulate(vals.begin(), vals.end(), 0.0) / vals.size();
  }

  // Run-to-run ranking ceiling.
  if (gt.policy_ids != gt2.policy_ids)
    throw std::invalid_argument("ground-truth runs cover different policies");
  for (Metric m : {Metric::reward, Metric::success, Metric::strict_success}) {
    auto rho = spearman(gt.metric(m), gt2.metric(m));
    rep.aggregates["gt_run_rho_" + metric_name(m)] =
        rho ? *rho : std::numeric_limits<double>::quiet_NaN();
  }

  for (const std::string axis : {"layer", "n", "valtype"}) {
    std::map<std::string, std::vector<double>> groups;
    for (const auto* c : expert_cells)
      if (defined(c->rho.at("vsdr")))
        groups[axis_value(c->cell, axis)].push_back(*c->rho.at("vsdr"));
    for (const auto& [key, vals] : groups)
      rep.boxes.emplace_back(axis + "=" + key, box_summary(vals));
  }
  return rep;
}

std::vector<std::pair<std::string, BoxSummary>> protocol_comparison(
    const std::vector<ScoreTable>& tables, const GroundTruth& gt, int fixed_n) {
  std::map<std::string, std::vector<double>> groups;
  for (const auto& t : tables) {
    if (t.cell.n_components != fixed_n) continue;
    auto rho = eval_cell(t, gt).rho.at("vsdr");
    if (rho) groups[t.cell.protocol].push_back(*rho);
  }
  std::vector<std::pair<std::string, BoxSummary>> out;
  for (const std::string name : {"expert", "sparse_expert", "initial"}) {
    auto it = groups.find(name);
    if (it != groups.end()) out.emplace_back(name, box_summary(it->second));
  }
  return out;
}

std::optional<double> vsdr_rho_on_subset(const ScoreTable& table, const GroundTruth& gt,
                                         const std::vector<std::string>& keep_ids) {
  std::set<std::string> keep(keep_ids.begin(), keep_ids.end());
  std::set<std::string> known(table.policy_ids.begin(), table.policy_ids.end());
  for (const auto& id : keep)
    if (!known.count(id)) throw std::invalid_argument("unknown policy id in subset: " + id);
  std::vector<int> idx;
  for (int i = 0; i < table.rows(); ++i)
    if (keep.count(table.policy_ids[i])) idx.push_back(i);
  if (idx.size() < 2) return std::nullopt;

  Eigen::VectorXd sub_s(idx.size()), sub_r(idx.size()), sub_gt(idx.size());
  Eigen::VectorXd gtv = gt_vector_for(table, gt);
  for (size_t k = 0; k < idx.size(); ++k) {
    sub_s(k) = table.s(idx[k]);
    sub_r(k) = table.r(idx[k]);
    sub_gt(k) = gtv(idx[k]);
  }
  return spearman(vsdr_scores(sub_s, sub_r), sub_gt);
}

std::vector<SubsetSummary> separability_analysis(
    const std::vector<ScoreTable>& expert_tables, const GroundTruth& gt,
    const std::vector<std::pair<std::string, std::vector<std::string>>>& subsets) {
  std::vector<SubsetSummary> out;
  for (const auto& [name, ids] : subsets) {
    SubsetSummary summary;
    summary.name = name;
    summary.n_policies = static_cast<int>(ids.size());
    std::vector<double> rhos;
    for (const auto& t : expert_tables) {
      auto rho = vsdr_rho_on_subset(t, gt, ids);
      if (rho) rhos.push_back(*rho);
    }
    if (!rhos.empty()) summary.box = box_summary(rhos);
    out.push_back(std::move(summary));
  }
  return out;
}

}  // namespace vsdr
