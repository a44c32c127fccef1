#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numeric>

#include "vsdr/mixture.hpp"
#include "vsdr/rng.hpp"

using namespace vsdr;

namespace {

ActivationDataset make_dataset(const std::vector<double>& values, const std::string& layer = "fc0") {
  ActivationDataset ds;
  ds.layer_name = layer;
  ds.data.resize(static_cast<int>(values.size()), 1);
  for (size_t i = 0; i < values.size(); ++i) ds.data(static_cast<int>(i), 0) = values[i];
  return ds;
}

// 400 points, half from N(-5, 0.25), half from N(+5, 0.25)
ActivationDataset two_cluster_data(uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v;
  for (int i = 0; i < 200; ++i) v.push_back(-5.0 + 0.5 * rng.gauss());
  for (int i = 0; i < 200; ++i) v.push_back(5.0 + 0.5 * rng.gauss());
  return make_dataset(v);
}

double gauss_pdf(double x, double mu, double var) {
  return std::exp(-0.5 * (x - mu) * (x - mu) / var) / std::sqrt(2.0 * M_PI * var);
}

}  // namespace

TEST_CASE("single gaussian MLE on two points") {
  auto ds = make_dataset({-1.0, 1.0});
  EmConfig cfg;
  Gmm g = fit_gmm(ds, 1, cfg);
  CHECK(g.weights(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(g.means(0, 0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(g.diag_covariances(0, 0) == doctest::Approx(1.0).epsilon(1e-12));  // population MLE
}

TEST_CASE("two-cluster recovery vs sign-split oracle") {
  auto ds = two_cluster_data(99);

  // oracle: per-cluster sample mean/variance after splitting at 0
  double neg_sum = 0, pos_sum = 0;
  int neg_n = 0, pos_n = 0;
  for (int i = 0; i < ds.rows(); ++i) {
    double x = ds.data(i, 0);
    if (x < 0) { neg_sum += x; ++neg_n; } else { pos_sum += x; ++pos_n; }
  }
  double oracle_neg = neg_sum / neg_n;
  double oracle_pos = pos_sum / pos_n;
  REQUIRE(std::abs(oracle_neg + 5.0) < 0.15);
  REQUIRE(std::abs(oracle_pos - 5.0) < 0.15);

  EmConfig cfg;
  cfg.rng_seed = 7;
  Gmm g = fit_gmm(ds, 2, cfg);
  double lo = std::min(g.means(0, 0), g.means(1, 0));
  double hi = std::max(g.means(0, 0), g.means(1, 0));
  CHECK(std::abs(lo - oracle_neg) < 0.2);
  CHECK(std::abs(hi - oracle_pos) < 0.2);
  CHECK(std::abs(lo + 5.0) < 0.2);
  CHECK(std::abs(hi - 5.0) < 0.2);
  CHECK(std::abs(g.weights(0) - 0.5) < 0.1);
  CHECK(std::abs(g.weights(1) - 0.5) < 0.1);
}

TEST_CASE("degenerate data engages variance floor") {
  auto ds = make_dataset(std::vector<double>(10, 3.25));
  EmConfig cfg;
  Gmm g = fit_gmm(ds, 1, cfg);
  CHECK(g.means(0, 0) == doctest::Approx(3.25).epsilon(1e-15));
  CHECK(g.diag_covariances(0, 0) == doctest::Approx(cfg.variance_floor).epsilon(1e-15));
}

TEST_CASE("fit_gmm rejects bad inputs") {
  auto ds = make_dataset({0.0, 1.0});
  EmConfig cfg;
  CHECK_THROWS(fit_gmm(ds, 3, cfg));  // n_components > M
  auto bad = make_dataset({0.0, std::nan("")});
  CHECK_THROWS(fit_gmm(bad, 1, cfg));
  ActivationDataset empty;
  empty.layer_name = "fc0";
  empty.data.resize(0, 1);
  CHECK_THROWS(fit_gmm(empty, 1, cfg));
}

TEST_CASE("log_likelihood closed forms") {
  Gmm g;
  g.n_components = 1;
  g.layer_name = "fc0";
  g.weights = Eigen::VectorXd::Ones(1);
  g.means = Eigen::MatrixXd::Zero(1, 1);
  g.diag_covariances = Eigen::MatrixXd::Ones(1, 1);

  Eigen::VectorXd x(1);
  x << 0.0;
  CHECK(log_likelihood(g, x) == doctest::Approx(-0.91893853320467274).epsilon(1e-12));
  x << 2.0;
  CHECK(log_likelihood(g, x) == doctest::Approx(-2.9189385332046727).epsilon(1e-12));

  Eigen::VectorXd wrong(2);
  wrong << 0.0, 0.0;
  CHECK_THROWS(log_likelihood(g, wrong));
}

TEST_CASE("two-component log_likelihood vs direct summation oracle") {
  Gmm g;
  g.n_components = 2;
  g.layer_name = "fc0";
  g.weights = Eigen::VectorXd::Constant(2, 0.5);
  g.means.resize(2, 1);
  g.means << -5.0, 5.0;
  g.diag_covariances = Eigen::MatrixXd::Ones(2, 1);

  // direct summation, no log-sum-exp
  double expected = std::log(0.5 * gauss_pdf(0.0, -5.0, 1.0) + 0.5 * gauss_pdf(0.0, 5.0, 1.0));
  Eigen::VectorXd x(1);
  x << 0.0;
  CHECK(log_likelihood(g, x) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("mean_log_likelihood basics") {
  Gmm g;
  g.n_components = 1;
  g.layer_name = "fc0";
  g.weights = Eigen::VectorXd::Ones(1);
  g.means = Eigen::MatrixXd::Zero(1, 1);
  g.diag_covariances = Eigen::MatrixXd::Ones(1, 1);

  auto single = make_dataset({0.7});
  Eigen::VectorXd x(1);
  x << 0.7;
  CHECK(mean_log_likelihood(g, single) == doctest::Approx(log_likelihood(g, x)).epsilon(1e-15));

  auto pm2 = make_dataset({-2.0, 2.0});
  CHECK(mean_log_likelihood(g, pm2) == doctest::Approx(-2.9189385332046727).epsilon(1e-12));

  auto mismatched = make_dataset({0.0}, "relu0");
  CHECK_THROWS(mean_log_likelihood(g, mismatched));
}

TEST_CASE("richer mixture explains its training data at least as well as one gaussian") {
  auto ds = two_cluster_data(123);
  EmConfig cfg;
  cfg.rng_seed = 5;
  Gmm g1 = fit_gmm(ds, 1, cfg);
  Gmm g2 = fit_gmm(ds, 2, cfg);
  CHECK(mean_log_likelihood(g2, ds) >= mean_log_likelihood(g1, ds) - 1e-9);
}

TEST_CASE("EM log-likelihood is non-decreasing within each restart") {
  auto ds = two_cluster_data(321);
  EmConfig cfg;
  cfg.rng_seed = 11;
  EmTrace trace;
  fit_gmm(ds, 3, cfg, &trace);
  REQUIRE(trace.restart_ll.size() == static_cast<size_t>(cfg.n_restarts));
  for (const auto& series : trace.restart_ll) {
    REQUIRE(series.size() >= 2);
    for (size_t i = 1; i < series.size(); ++i) CHECK(series[i] >= series[i - 1] - 1e-7);
  }
  CHECK(trace.best_restart >= 0);
}

TEST_CASE("row permutation leaves the best final log-likelihood unchanged") {
  auto ds = two_cluster_data(77);
  ActivationDataset permuted = ds;
  Rng rng(4242);
  for (int i = ds.rows() - 1; i > 0; --i) {
    int j = rng.uniform_int(i + 1);
    permuted.data.row(i).swap(permuted.data.row(j));
  }
  EmConfig cfg;
  cfg.rng_seed = 13;
  EmTrace ta, tb;
  fit_gmm(ds, 2, cfg, &ta);
  fit_gmm(permuted, 2, cfg, &tb);
  double lla = ta.restart_final_ll[static_cast<size_t>(ta.best_restart)];
  double llb = tb.restart_final_ll[static_cast<size_t>(tb.best_restart)];
  CHECK(lla == doctest::Approx(llb).epsilon(1e-6));
}

TEST_CASE("1D density integrates to one") {
  Gmm g;
  g.n_components = 1;
  g.layer_name = "fc0";
  g.weights = Eigen::VectorXd::Ones(1);
  g.means = Eigen::MatrixXd::Constant(1, 1, 1.7);
  g.diag_covariances = Eigen::MatrixXd::Constant(1, 1, 2.3);

  double sigma = std::sqrt(2.3);
  double lo = 1.7 - 8 * sigma, hi = 1.7 + 8 * sigma;
  int n = 4096;  // Simpson
  double h = (hi - lo) / n;
  double acc = 0.0;
  for (int i = 0; i <= n; ++i) {
    Eigen::VectorXd x(1);
    x << lo + i * h;
    double f = std::exp(log_likelihood(g, x));
    acc += f * ((i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0));
  }
  acc *= h / 3.0;
  CHECK(acc == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("log_likelihood stays finite far from the data") {
  auto ds = make_dataset(std::vector<double>(16, 0.0));
  EmConfig cfg;
  Gmm g = fit_gmm(ds, 1, cfg);
  Eigen::VectorXd x(1);
  x << 1e6;
  double ll = log_likelihood(g, x);
  CHECK(std::isfinite(ll));
}

TEST_CASE("activation dataset and gmm files round-trip") {
  auto tmp = std::filesystem::temp_directory_path() / "vsdr_mixture_test";
  std::filesystem::create_directories(tmp);

  Rng rng(55);
  ActivationDataset ds;
  ds.layer_name = "relu1";
  ds.data.resize(7, 3);
  for (int i = 0; i < 7; ++i)
    for (int j = 0; j < 3; ++j) ds.data(i, j) = rng.gauss() * 1e3;

  auto path = tmp / "acts.txt";
  save_activation_dataset(ds, path);
  auto back = load_activation_dataset(path);
  CHECK(back.layer_name == ds.layer_name);
  CHECK((back.data - ds.data).cwiseAbs().maxCoeff() == 0.0);

  EmConfig cfg;
  cfg.rng_seed = 3;
  Gmm g = fit_gmm(ds, 2, cfg);
  auto gpath = tmp / "gmm.json";
  save_gmm(g, gpath, "key123");
  std::string key;
  Gmm g2 = load_gmm(gpath, &key);
  CHECK(key == "key123");
  CHECK((g2.means - g.means).cwiseAbs().maxCoeff() == 0.0);
  CHECK((g2.diag_covariances - g.diag_covariances).cwiseAbs().maxCoeff() == 0.0);
  CHECK((g2.weights - g.weights).cwiseAbs().maxCoeff() == 0.0);

  std::filesystem::remove_all(tmp);
}
