#include "vsdr/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "vsdr/io_util.hpp"
#include "vsdr/rng.hpp"

namespace vsdr {

using json = nlohmann::json;

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

struct EmState {
  Eigen::VectorXd weights;  // N
  Eigen::MatrixXd means;    // N x D
  Eigen::MatrixXd vars;     // N x D
};

// logp(i,k) = log w_k + log N(x_i; mu_k, diag var_k); returns per-row
// log-likelihoods and, optionally, the full component log-density matrix.
double e_step(const Eigen::MatrixXd& data, const Eigen::MatrixXd& data_sq, const EmState& st,
              Eigen::VectorXd& row_ll, Eigen::MatrixXd* logp_out) {
  const int m = static_cast<int>(data.rows());
  const int d = static_cast<int>(data.cols());
  const int n = static_cast<int>(st.weights.size());

  Eigen::MatrixXd logp(m, n);
  for (int k = 0; k < n; ++k) {
    Eigen::ArrayXd inv_var = st.vars.row(k).transpose().array().inverse();
    double cst = std::log(st.weights(k)) -
                 0.5 * (d * kLog2Pi + st.vars.row(k).array().log().sum());
    Eigen::VectorXd mu_iv = (st.means.row(k).transpose().array() * inv_var).matrix();
    double mu_term = (st.means.row(k).transpose().array().square() * inv_var).sum();
    logp.col(k) = (cst - 0.5 * mu_term) +
                  (data * mu_iv).array() -
                  0.5 * (data_sq * inv_var.matrix()).array();
  }

  Eigen::VectorXd row_max = logp.rowwise().maxCoeff();
  row_ll = row_max.array() +
           (logp.colwise() - row_max).array().exp().rowwise().sum().log();
  if (logp_out) *logp_out = std::move(logp);
  return row_ll.sum();
}

Eigen::MatrixXd kmeanspp_init(const Eigen::MatrixXd& data, int n, Rng& rng) {
  const int m = static_cast<int>(data.rows());
  const int d = static_cast<int>(data.cols());
  Eigen::MatrixXd centers(n, d);
  int first = rng.uniform_int(m);
  centers.row(0) = data.row(first);
  if (n == 1) return centers;

  Eigen::VectorXd d2 = (data.rowwise() - centers.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < n; ++c) {
    double total = d2.sum();
    int pick;
    if (total <= 0.0) {
      pick = rng.uniform_int(m);  // all remaining mass at chosen points
    } else {
      double u = rng.uniform() * total;
      double acc = 0.0;
      pick = m - 1;
      for (int i = 0; i < m; ++i) {
        acc += d2(i);
        if (u <= acc) {
          pick = i;
          break;
        }
      }
    }
    centers.row(c) = data.row(pick);
    d2 = d2.cwiseMin((data.rowwise() - centers.row(c)).rowwise().squaredNorm());
  }
  return centers;
}

}  // namespace

void ActivationDataset::validate() const {
  if (layer_name.empty()) throw std::invalid_argument("activation dataset: empty layer name");
  if (data.rows() < 1 || data.cols() < 1)
    throw std::invalid_argument("activation dataset: need M >= 1 and D >= 1");
  if (!data.allFinite())
    throw std::invalid_argument("activation dataset: non-finite values in layer " + layer_name);
}

void EmConfig::validate() const {
  if (max_iters < 1) throw std::invalid_argument("em config: max_iters >= 1 required");
  if (!(tol > 0.0)) throw std::invalid_argument("em config: tol > 0 required");
  if (n_restarts < 1) throw std::invalid_argument("em config: n_restarts >= 1 required");
  if (!(variance_floor > 0.0)) throw std::invalid_argument("em config: variance_floor > 0 required");
}

std::string EmConfig::fingerprint() const {
  std::ostringstream ss;
  ss << "max_iters=" << max_iters << ";tol=" << fmt_double(tol)
     << ";n_restarts=" << n_restarts << ";variance_floor=" << fmt_double(variance_floor)
     << ";rng_seed=" << rng_seed << ";standardize=" << (standardize ? 1 : 0);
  return ss.str();
}

void Gmm::validate() const {
  if (n_components < 1) throw std::invalid_argument("gmm: n_components >= 1 required");
  if (weights.size() != n_components || means.rows() != n_components ||
      diag_covariances.rows() != n_components || means.cols() != diag_covariances.cols())
    throw std::invalid_argument("gmm: inconsistent shapes");
  if ((weights.array() < 0.0).any()) throw std::invalid_argument("gmm: negative weight");
  if (std::abs(weights.sum() - 1.0) > 1e-9)
    throw std::invalid_argument("gmm: weights must sum to 1");
  if ((diag_covariances.array() <= 0.0).any())
    throw std::invalid_argument("gmm: variances must be positive");
}

Gmm fit_gmm(const ActivationDataset& dataset, int n_components, const EmConfig& cfg,
            EmTrace* trace) {
  dataset.validate();
  cfg.validate();
  const int m = dataset.rows();
  const int d = dataset.dim();
  if (n_components < 1) throw std::invalid_argument("fit_gmm: n_components >= 1 required");
  if (n_components > m)
    throw std::invalid_argument("fit_gmm: n_components (" + std::to_string(n_components) +
                                ") exceeds observation count (" + std::to_string(m) + ")");

  // Optional z-scoring; parameters are mapped back to raw space afterwards.
  Eigen::RowVectorXd shift = Eigen::RowVectorXd::Zero(d);
  Eigen::RowVectorXd scale = Eigen::RowVectorXd::Ones(d);
  Eigen::MatrixXd data = dataset.data;
  if (cfg.standardize) {
    shift = data.colwise().mean();
    Eigen::RowVectorXd var =
        (data.rowwise() - shift).array().square().colwise().mean();
    scale = var.array().sqrt().max(1e-12);
    data = (data.rowwise() - shift).array().rowwise() / scale.array();
  }

  const Eigen::MatrixXd data_sq = data.array().square();
  Eigen::RowVectorXd col_mean = data.colwise().mean();
  Eigen::RowVectorXd col_var =
      (data.rowwise() - col_mean).array().square().colwise().mean();
  Eigen::RowVectorXd init_var = col_var.cwiseMax(cfg.variance_floor);

  const double reseed_threshold = 1e-8 * static_cast<double>(m);

  EmState best;
  double best_ll = -std::numeric_limits<double>::infinity();
  if (trace) {
    trace->restart_ll.assign(cfg.n_restarts, {});
    trace->restart_final_ll.assign(cfg.n_restarts, 0.0);
    trace->best_restart = -1;
  }

  for (int restart = 0; restart < cfg.n_restarts; ++restart) {
    Rng rng(derive_seed(cfg.rng_seed, "em-restart", static_cast<uint64_t>(restart)));
    EmState st;
    st.weights = Eigen::VectorXd::Constant(n_components, 1.0 / n_components);
    st.means = kmeanspp_init(data, n_components, rng);
    st.vars = init_var.replicate(n_components, 1);

    Eigen::VectorXd row_ll(m);
    Eigen::MatrixXd logp;
    double prev_ll = -std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < cfg.max_iters; ++iter) {
      double ll = e_step(data, data_sq, st, row_ll, &logp);
      if (trace) trace->restart_ll[restart].push_back(ll);
      if (iter > 0) {
        double rel = (ll - prev_ll) / (std::abs(prev_ll) + 1e-12);
        if (rel < cfg.tol) break;
      }
      prev_ll = ll;

      Eigen::MatrixXd resp = (logp.colwise() - row_ll).array().exp();
      Eigen::VectorXd nk = resp.colwise().sum();

      int lowest = 0;
      row_ll.minCoeff(&lowest);
      for (int k = 0; k < n_components; ++k) {
        if (nk(k) < reseed_threshold) {
          // Starved component: re-seed at the point the mixture explains worst.
          st.means.row(k) = data.row(lowest);
          st.vars.row(k) = init_var;
          st.weights(k) = 1.0 / m;
        } else {
          st.means.row(k) = (resp.col(k).transpose() * data) / nk(k);
          Eigen::MatrixXd centered = data.rowwise() - st.means.row(k);
          st.vars.row(k) =
              (centered.array().square().colwise() * resp.col(k).array()).colwise().sum() /
              nk(k);
          st.vars.row(k) = st.vars.row(k).cwiseMax(cfg.variance_floor);
          st.weights(k) = nk(k) / m;
        }
      }
      st.weights /= st.weights.sum();
    }

    double final_ll = e_step(data, data_sq, st, row_ll, nullptr);
    if (trace) {
      trace->restart_ll[restart].push_back(final_ll);
      trace->restart_final_ll[restart] = final_ll;
    }
    if (final_ll > best_ll) {
      best_ll = final_ll;
      best = std::move(st);
      if (trace) trace->best_restart = restart;
    }
  }

  Gmm out;
  out.n_components = n_components;
  out.layer_name = dataset.layer_name;
  out.weights = best.weights;
  if (cfg.standardize) {
    out.means = (best.means.array().rowwise() * scale.array()).rowwise() + shift.array();
    out.diag_covariances =
        (best.vars.array().rowwise() * scale.array().square()).cwiseMax(cfg.variance_floor);
  } else {
    out.means = best.means;
    out.diag_covariances = best.vars;
  }
  out.validate();
  return out;
}

Eigen::VectorXd log_likelihood_rows(const Gmm& gmm, const Eigen::MatrixXd& rows) {
  if (rows.cols() != gmm.dim())
    throw std::invalid_argument("log_likelihood: dimension mismatch (" +
                                std::to_string(rows.cols()) + " vs " +
                                std::to_string(gmm.dim()) + ")");
  EmState st{gmm.weights, gmm.means, gmm.diag_covariances};
  Eigen::VectorXd row_ll;
  Eigen::MatrixXd data_sq = rows.array().square();
  e_step(rows, data_sq, st, row_ll, nullptr);
  return row_ll;
}

double log_likelihood(const Gmm& gmm, const Eigen::VectorXd& x) {
  return log_likelihood_rows(gmm, x.transpose())(0);
}

double mean_log_likelihood(const Gmm& gmm, const ActivationDataset& dataset) {
  dataset.validate();
  if (dataset.layer_name != gmm.layer_name)
    throw std::invalid_argument("mean_log_likelihood: layer mismatch (" + dataset.layer_name +
                                " vs " + gmm.layer_name + ")");
  return log_likelihood_rows(gmm, dataset.data).mean();
}

void save_activation_dataset(const ActivationDataset& ds, const std::filesystem::path& path) {
  ds.validate();
  std::ostringstream out;
  out << ds.rows() << ' ' << ds.dim() << ' ' << ds.layer_name << '\n';
  for (int i = 0; i < ds.rows(); ++i) {
    for (int j = 0; j < ds.dim(); ++j) {
      if (j) out << ' ';
      out << fmt_double(ds.data(i, j));
    }
    out << '\n';
  }
  atomic_write_file(path, out.str());
}

ActivationDataset load_activation_dataset(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  int m = 0, d = 0;
  ActivationDataset ds;
  if (!(in >> m >> d >> ds.layer_name))
    throw std::runtime_error("bad activation file header: " + path.string());
  ds.data.resize(m, d);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < d; ++j)
      if (!(in >> ds.data(i, j)))
        throw std::runtime_error("truncated activation file: " + path.string());
  ds.validate();
  return ds;
}

namespace {

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  const auto rows = j.size();
  const auto cols = rows ? j.at(0).size() : 0;
  Eigen::MatrixXd m(rows, cols);
  for (size_t i = 0; i < rows; ++i)
    for (size_t c = 0; c < cols; ++c) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = j.at(i).at(c).get<double>();
  return m;
}

}  // namespace

std::string gmm_to_json(const Gmm& gmm, const std::string& cache_key) {
  json j;
  j["n_components"] = gmm.n_components;
  j["layer_name"] = gmm.layer_name;
  j["weights"] = std::vector<double>(gmm.weights.data(), gmm.weights.data() + gmm.weights.size());
  j["means"] = matrix_to_json(gmm.means);
  j["diag_covariances"] = matrix_to_json(gmm.diag_covariances);
  if (!cache_key.empty()) j["cache_key"] = cache_key;
  return j.dump(2) + "\n";
}

Gmm gmm_from_json(const std::string& text, std::string* cache_key) {
  json j = json::parse(text);
  Gmm g;
  g.n_components = j.at("n_components").get<int>();
  g.layer_name = j.at("layer_name").get<std::string>();
  auto w = j.at("weights").get<std::vector<double>>();
  g.weights = Eigen::Map<Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
  g.means = matrix_from_json(j.at("means"));
  g.diag_covariances = matrix_from_json(j.at("diag_covariances"));
  if (cache_key) *cache_key = j.value("cache_key", "");
  g.validate();
  return g;
}

void save_gmm(const Gmm& gmm, const std::filesystem::path& path, const std::string& cache_key) {
  atomic_write_file(path, gmm_to_json(gmm, cache_key));
}

Gmm load_gmm(const std::filesystem::path& path, std::string* cache_key) {
  return gmm_from_json(read_file(path), cache_key);
}

}  // namespace vsdr
