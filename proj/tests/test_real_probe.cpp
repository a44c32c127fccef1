#include <doctest.h>
#include <unistd.h>

#include <filesystem>
#include <stdexcept>

#include "helpers.hpp"
#include "vsdr/real_probe.hpp"
#include "vsdr/rollout.hpp"

using namespace vsdr;
namespace fs = std::filesystem;

namespace {

DRConfig config_by_name(const std::string& name) {
  for (const auto& c : default_dr_suite())
    if (c.name == name) return c;
  throw std::runtime_error("not in suite: " + name);
}

EmConfig probe_em() {
  EmConfig em;
  em.n_restarts = 2;
  em.max_iters = 60;
  em.rng_seed = 11;
  return em;
}

}  // namespace

TEST_CASE("tapped observation batches reproduce rollout activations bit for bit") {
  MlpPolicy policy = testutil::random_policy("probe", 17);
  DRConfig cfg = config_by_name("heavy-freq-1");
  Eigen::MatrixXd obs;
  auto all = collect_all_activations(policy, cfg, 40, 123, &obs);
  for (const auto& layer : {"encoder", "fc0", "relu0", "fc1", "relu1"}) {
    ActivationDataset taps = taps_for_obs(policy, obs, layer);
    CHECK(taps.layer_name == layer);
    CHECK((taps.data - all.at(layer).data).cwiseAbs().maxCoeff() == 0.0);
  }
  CHECK_THROWS_AS(taps_for_obs(policy, obs, "decoder"), std::invalid_argument);
}

TEST_CASE("scoring the generating observations returns the training log-likelihood") {
  MlpPolicy policy = testutil::random_policy("probe-id", 29);
  DRConfig cfg = config_by_name("heavy-freq-0");
  Eigen::MatrixXd obs;
  auto all = collect_all_activations(policy, cfg, 60, 321, &obs);
  EmConfig em = probe_em();
  for (const auto& layer : {"encoder", "fc1"}) {
    const ActivationDataset& train = all.at(layer);
    Gmm gmm = fit_gmm(train, 2, em);
    double train_ll = mean_log_likelihood(gmm, train);
    CHECK(ood_score(policy, layer, 2, train, obs, em) == train_ll);
    CHECK(ood_score_with(gmm, policy, obs) == train_ll);
  }
  CHECK_THROWS_AS(ood_score(policy, "fc0", 2, all.at("fc1"), obs, em), std::invalid_argument);
}

TEST_CASE("grossly shifted observations score strictly lower") {
  MlpPolicy policy = testutil::random_policy("probe-shift", 31);
  DRConfig cfg = config_by_name("heavy-freq-1");
  Eigen::MatrixXd obs;
  auto all = collect_all_activations(policy, cfg, 60, 77, &obs);
  EmConfig em = probe_em();
  Eigen::MatrixXd shifted = obs.array() + 100.0;
  for (const auto& layer : {"encoder", "fc0", "relu1"}) {
    double in_dist = ood_score(policy, layer, 2, all.at(layer), obs, em);
    double far = ood_score(policy, layer, 2, all.at(layer), shifted, em);
    CAPTURE(layer);
    CHECK(far < in_dist);
  }
}

TEST_CASE("the score ignores observation order and responds to extra rows") {
  MlpPolicy policy = testutil::random_policy("probe-perm", 43);
  DRConfig cfg = config_by_name("heavy-freq-2");
  Eigen::MatrixXd obs;
  auto all = collect_all_activations(policy, cfg, 50, 55, &obs);
  Gmm gmm = fit_gmm(all.at("fc0"), 1, probe_em());

  Eigen::MatrixXd reversed = obs.colwise().reverse();
  double forward = ood_score_with(gmm, policy, obs);
  double backward = ood_score_with(gmm, policy, reversed);
  CHECK(forward == doctest::Approx(backward).epsilon(1e-12));

  // Appending an outlier row moves the mean; the probe is not constant.
  Eigen::MatrixXd extra(obs.rows() + 1, obs.cols());
  extra.topRows(obs.rows()) = obs;
  extra.row(obs.rows()).setConstant(50.0);
  CHECK(ood_score_with(gmm, policy, extra) < forward);
}

TEST_CASE("relu-layer mixtures keep the all-zeros tap finite") {
  MlpPolicy policy = testutil::random_policy("probe-relu", 61);
  DRConfig cfg = config_by_name("heavy-freq-1");
  auto all = collect_all_activations(policy, cfg, 50, 99, nullptr);
  Gmm gmm = fit_gmm(all.at("relu0"), 2, probe_em());
  CHECK((all.at("relu0").data.array() >= 0.0).all());
  double ll = log_likelihood(gmm, Eigen::VectorXd::Zero(gmm.dim()));
  CHECK(std::isfinite(ll));
}

TEST_CASE("fitted mixtures are reused from cache only while the key matches") {
  fs::path dir = fs::temp_directory_path() / ("vsdr_gmm_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  MlpPolicy policy = testutil::random_policy("probe-cache", 71);
  DRConfig cfg = config_by_name("heavy-freq-1");
  auto all = collect_all_activations(policy, cfg, 40, 13, nullptr);
  fs::path acts_file = dir / "acts.txt";
  save_activation_dataset(all.at("encoder"), acts_file);
  EmConfig em = probe_em();
  fs::path cache = dir / "gmm.json";

  Gmm first = fit_gmm_cached(acts_file, 2, em, cache);
  REQUIRE(fs::exists(cache));

  // Doctor the cached means under the same key: a hit returns them untouched.
  std::string key = gmm_cache_key(acts_file, em, 2);
  Gmm doctored = first;
  doctored.means.array() += 3.0;
  save_gmm(doctored, cache, key);
  Gmm hit = fit_gmm_cached(acts_file, 2, em, cache);
  CHECK((hit.means - doctored.means).cwiseAbs().maxCoeff() == 0.0);

  // Any key ingredient change forces a refit that overwrites the file.
  EmConfig em2 = em;
  em2.rng_seed = 12;
  CHECK(gmm_cache_key(acts_file, em2, 2) != key);
  CHECK(gmm_cache_key(acts_file, em, 3) != key);
  Gmm refit = fit_gmm_cached(acts_file, 2, em2, cache);
  CHECK((refit.means - doctored.means).cwiseAbs().maxCoeff() > 0.0);
  std::string stored;
  load_gmm(cache, &stored);
  CHECK(stored == gmm_cache_key(acts_file, em2, 2));

  // Rewriting the activations file changes the content hash too.
  ActivationDataset other = all.at("encoder");
  other.data(0, 0) += 1.0;
  save_activation_dataset(other, acts_file);
  CHECK(gmm_cache_key(acts_file, em, 2) != key);
  fs::remove_all(dir);
}
