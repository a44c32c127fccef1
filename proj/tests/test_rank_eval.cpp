#include <doctest.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <vector>

#include "helpers.hpp"
#include "vsdr/rank_eval.hpp"
#include "vsdr/rollout.hpp"

using namespace vsdr;
namespace fs = std::filesystem;

namespace {

// Average-rank oracle by sorting positions, independent of the library path.
std::vector<double> oracle_ranks(const std::vector<double>& scores) {
  const int n = static_cast<int>(scores.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return scores[a] > scores[b]; });
  std::vector<double> ranks(n, 0.0);
  int i = 0;
  while (i < n) {
    int j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    double avg = 0.5 * (i + j) + 1.0;  // mean of 1-based positions i..j
    for (int k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const int n = static_cast<int>(x.size());
  double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (int i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

Eigen::VectorXd to_vec(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

TEST_CASE("descending ranks with tie averaging") {
  Eigen::VectorXd s(3);
  s << 3.0, 1.0, 2.0;
  Eigen::VectorXd r = rank_with_ties(s);
  CHECK(r(0) == 1.0);
  CHECK(r(1) == 3.0);
  CHECK(r(2) == 2.0);

  Eigen::VectorXd t(2);
  t << 5.0, 5.0;
  Eigen::VectorXd rt = rank_with_ties(t);
  CHECK(rt(0) == 1.5);
  CHECK(rt(1) == 1.5);

  Eigen::VectorXd u(5);
  u << 1.0, 2.0, 2.0, 2.0, 7.0;
  Eigen::VectorXd ru = rank_with_ties(u);
  CHECK(ru(4) == 1.0);
  CHECK(ru(1) == 3.0);  // positions 2,3,4 share (2+3+4)/3
  CHECK(ru(2) == 3.0);
  CHECK(ru(3) == 3.0);
  CHECK(ru(0) == 5.0);
}

TEST_CASE("spearman matches a pearson-on-average-ranks oracle with ties") {
  Rng rng(20240601);
  int checked = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 10;
    std::vector<double> a(n), b(n);
    for (int i = 0; i < n; ++i) {
      // Coarse grid injects frequent ties.
      a[i] = std::floor(rng.uniform(0.0, 4.0));
      b[i] = std::floor(rng.uniform(0.0, 4.0));
    }
    auto rho = spearman(to_vec(a), to_vec(b));
    auto ra = oracle_ranks(a), rb = oracle_ranks(b);
    bool a_const = std::all_of(a.begin(), a.end(), [&](double v) { return v == a[0]; });
    bool b_const = std::all_of(b.begin(), b.end(), [&](double v) { return v == b[0]; });
    if (a_const || b_const) {
      CHECK_FALSE(rho.has_value());
      continue;
    }
    REQUIRE(rho.has_value());
    CHECK(*rho == doctest::Approx(pearson(ra, rb)).epsilon(1e-12));
    CHECK(*rho >= -1.0 - 1e-12);
    CHECK(*rho <= 1.0 + 1e-12);
    ++checked;
  }
  CHECK(checked > 900);
}

TEST_CASE("mean spearman over all permutations of four items is zero") {
  Eigen::VectorXd base(4);
  base << 0.3, 1.1, 2.7, 5.0;
  std::vector<int> idx{0, 1, 2, 3};
  double total = 0.0;
  int count = 0;
  do {
    Eigen::VectorXd perm(4);
    for (int i = 0; i < 4; ++i) perm(i) = base(idx[i]);
    auto rho = spearman(base, perm);
    REQUIRE(rho.has_value());
    total += *rho;
    ++count;
  } while (std::next_permutation(idx.begin(), idx.end()));
  CHECK(count == 24);
  CHECK(std::abs(total / count) < 1e-12);
}

TEST_CASE("spearman edge cases: constants, perfect agreement, reversal") {
  Eigen::VectorXd a(5), b(5);
  a << 1, 2, 3, 4, 5;
  b << 10, 20, 30, 40, 50;
  CHECK(*spearman(a, b) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(*spearman(a, (-b).eval()) == doctest::Approx(-1.0).epsilon(1e-15));

  Eigen::VectorXd c = Eigen::VectorXd::Constant(5, 3.3);
  CHECK_FALSE(spearman(a, c).has_value());
  CHECK_FALSE(spearman(c, a).has_value());

  Eigen::VectorXd one(1);
  one << 2.0;
  CHECK_FALSE(spearman(one, one).has_value());

  Eigen::VectorXd wrong(4);
  wrong << 1, 2, 3, 4;
  CHECK_THROWS_AS(spearman(a, wrong), std::invalid_argument);
}

TEST_CASE("box summaries report exact quartiles") {
  BoxSummary bs = box_summary({5.0, 1.0, 3.0, 2.0, 4.0});
  CHECK(bs.min == 1.0);
  CHECK(bs.median == 3.0);
  CHECK(bs.max == 5.0);
  CHECK(bs.count == 5);
  CHECK(bs.q1 >= bs.min);
  CHECK(bs.q1 <= bs.median);
  CHECK(bs.q3 >= bs.median);
  CHECK(bs.q3 <= bs.max);

  BoxSummary single = box_summary({2.5});
  CHECK(single.min == 2.5);
  CHECK(single.q1 == 2.5);
  CHECK(single.median == 2.5);
  CHECK(single.q3 == 2.5);
  CHECK(single.max == 2.5);
  CHECK(single.count == 1);

  BoxSummary even = box_summary({1.0, 2.0, 3.0, 4.0});
  CHECK(even.median == 2.5);
}

TEST_CASE("ground truth evaluation ranks a solver above a random policy") {
  DomainParams real = default_nominal();
  real.id = "real";
  MlpPolicy random = testutil::random_policy("gt-rand", 3);
  MlpPolicy solver = testutil::solver_policy(real, "gt-solver");

  std::vector<EpisodeRecord> episodes;
  std::vector<std::string> episode_ids;
  GroundTruth gt =
      ground_truth_eval({random, solver}, real, 5, 1, 2025, &episodes, &episode_ids);
  gt.validate();
  CHECK(gt.run_id == 1);
  REQUIRE(gt.policy_ids.size() == 2);
  CHECK(gt.policy_ids[0] == "gt-rand");
  CHECK(gt.reward.size() == 2);
  CHECK(gt.reward(1) > gt.reward(0));
  CHECK(gt.success(1) > gt.success(0));
  CHECK(gt.success(1) == 1.0);  // the solver reaches the goal from every start
  CHECK(gt.strict(1) == 1.0);
  CHECK(gt.metric(Metric::reward)(1) == gt.reward(1));
  CHECK(gt.metric(Metric::strict_success)(0) == gt.strict(0));

  // One episode per policy per grid cell, ids prefixed by the policy.
  CHECK(episodes.size() == 2 * 25);
  CHECK(episode_ids.size() == episodes.size());
  CHECK(episode_ids[0].find("gt-rand") == 0);

  // The same seed reproduces the run; a different seed shifts rewards when
  // noise is present.
  GroundTruth gt_again = ground_truth_eval({random, solver}, real, 5, 1, 2025);
  CHECK((gt.reward - gt_again.reward).cwiseAbs().maxCoeff() == 0.0);

  fs::path file = fs::temp_directory_path() /
                  ("vsdr_gt_" + std::to_string(::getpid()) + ".json");
  save_ground_truth(gt, file);
  GroundTruth loaded = load_ground_truth(file);
  CHECK(loaded.run_id == gt.run_id);
  CHECK(loaded.policy_ids == gt.policy_ids);
  CHECK((loaded.reward - gt.reward).cwiseAbs().maxCoeff() == 0.0);
  CHECK((loaded.success - gt.success).cwiseAbs().maxCoeff() == 0.0);
  CHECK((loaded.strict - gt.strict).cwiseAbs().maxCoeff() == 0.0);
  fs::remove(file);
}

TEST_CASE("cell evaluation computes every method correlation against ground truth") {
  GroundTruth gt;
  gt.run_id = 1;
  gt.policy_ids = {"a", "b", "c", "d"};
  gt.reward.resize(4);
  gt.reward << 0.1, 0.5, 0.9, 1.3;
  gt.success = gt.reward;
  gt.strict = gt.reward;

  Eigen::VectorXd s(4), r(4), opc(4), soft_opc(4);
  s << 1.0, 2.0, 3.0, 4.0;  // agrees with the truth
  r << 4.0, 3.0, 2.0, 1.0;  // reversed
  opc << 2.0, 1.0, 4.0, 3.0;
  soft_opc << 1.0, 2.0, 4.0, 3.0;
  ScoreTable table = make_score_table({"heavy", "reward", "encoder", 2, "expert"}, gt.policy_ids,
                                      s, r, opc, soft_opc);

  CellResult res = eval_cell(table, gt);
  for (const auto& m : kMethods) REQUIRE(res.rho.count(m) == 1);
  CHECK(*res.rho.at("sim_only") == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(*res.rho.at("ood_only") == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(*res.rho.at("opc") == doctest::Approx(*spearman(table.opc, gt.reward)).epsilon(1e-12));
  CHECK(*res.rho.at("soft_opc") ==
        doctest::Approx(*spearman(table.soft_opc, gt.reward)).epsilon(1e-12));

  // sim_opc fuses s with opc the same way vsdr fuses s with r.
  CHECK(*res.rho.at("sim_opc") ==
        doctest::Approx(*spearman(vsdr_scores(table.s, table.opc), gt.reward)).epsilon(1e-12));
  CHECK(*res.rho.at("sim_soft_opc") ==
        doctest::Approx(*spearman(vsdr_scores(table.s, table.soft_opc), gt.reward)).epsilon(1e-12));

  // The table's policy order need not match the ground truth's.
  std::vector<std::string> rev_ids(gt.policy_ids.rbegin(), gt.policy_ids.rend());
  ScoreTable shuffled = make_score_table(table.cell, rev_ids, s.reverse(), r.reverse(),
                                         opc.reverse(), soft_opc.reverse());
  CellResult res2 = eval_cell(shuffled, gt);
  CHECK(*res2.rho.at("sim_only") == doctest::Approx(*res.rho.at("sim_only")).epsilon(1e-12));
  CHECK(*res2.rho.at("vsdr") == doctest::Approx(*res.rho.at("vsdr")).epsilon(1e-12));

  GroundTruth missing = gt;
  missing.policy_ids[2] = "zzz";
  CHECK_THROWS_AS(eval_cell(table, missing), std::invalid_argument);

  // NaN baselines (no labeled set) yield absent baseline correlations.
  Eigen::VectorXd nan_col = Eigen::VectorXd::Constant(4, std::nan(""));
  ScoreTable nan_table = make_score_table(table.cell, gt.policy_ids, s, r, nan_col, nan_col);
  CellResult res3 = eval_cell(nan_table, gt);
  CHECK_FALSE(res3.rho.at("opc").has_value());
  CHECK_FALSE(res3.rho.at("sim_opc").has_value());
  CHECK(res3.rho.at("vsdr").has_value());
}

TEST_CASE("subset separability drops policies and reports remaining spread") {
  GroundTruth gt;
  gt.run_id = 1;
  gt.policy_ids = {"a", "b", "c", "d"};
  gt.reward.resize(4);
  gt.reward << 0.1, 0.5, 0.9, 1.3;
  gt.success = gt.reward;
  gt.strict = gt.reward;

  Eigen::VectorXd s(4);
  s << 1.0, 2.0, 3.0, 4.0;
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(4);
  ScoreTable table =
      make_score_table({"heavy", "reward", "encoder", 2, "expert"}, gt.policy_ids, s, ones, s, s);

  auto rho_full = vsdr_rho_on_subset(table, gt, {"a", "b", "c", "d"});
  REQUIRE(rho_full.has_value());
  CHECK(*rho_full == doctest::Approx(1.0).epsilon(1e-12));

  auto rho_pair = vsdr_rho_on_subset(table, gt, {"d", "a"});
  REQUIRE(rho_pair.has_value());
  CHECK(*rho_pair == doctest::Approx(1.0).epsilon(1e-12));

  CHECK_FALSE(vsdr_rho_on_subset(table, gt, {"a"}).has_value());
  CHECK_THROWS_AS(vsdr_rho_on_subset(table, gt, {"a", "nope"}), std::invalid_argument);

  auto subsets = separability_analysis(
      {table}, gt, {{"full", {"a", "b", "c", "d"}}, {"pair", {"a", "b"}}, {"solo", {"a"}}});
  REQUIRE(subsets.size() == 3);
  CHECK(subsets[0].name == "full");
  CHECK(subsets[0].n_policies == 4);
  REQUIRE(subsets[0].box.has_value());
  CHECK(subsets[0].box->count == 1);  // one expert table in play
  CHECK(subsets[0].box->median == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(subsets[1].n_policies == 2);
  CHECK_FALSE(subsets[2].box.has_value());  // too small for a correlation
}
