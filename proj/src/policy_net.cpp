#include "vsdr/policy_net.hpp"

#include <json.hpp>

#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "vsdr/io_util.hpp"

namespace vsdr {

std::string layer_kind_name(LayerKind kind) {
  return kind == LayerKind::affine ? "affine" : "relu";
}

LayerKind layer_kind_from(const std::string& name) {
  if (name == "affine") return LayerKind::affine;
  if (name == "relu") return LayerKind::relu;
  throw std::invalid_argument("unknown layer kind: " + name);
}

void LayerSpec::validate() const {
  if (name.empty()) throw std::invalid_argument("layer has no name");
  if (in_dim <= 0 || out_dim <= 0)
    throw std::invalid_argument("layer " + name + ": dimensions must be positive");
  if (kind == LayerKind::relu) {
    if (in_dim != out_dim)
      throw std::invalid_argument("relu layer " + name + ": in_dim must equal out_dim");
    return;
  }
  if (W.rows() != out_dim || W.cols() != in_dim || b.size() != out_dim)
    throw std::invalid_argument("layer " + name + ": weight shape mismatch");
  if (!W.allFinite() || !b.allFinite())
    throw std::invalid_argument("layer " + name + ": non-finite weights");
}

int MlpPolicy::obs_dim() const {
  return layers.empty() ? 0 : layers.front().in_dim;
}

int MlpPolicy::action_dim() const {
  return layers.empty() ? 0 : layers.back().out_dim;
}

void MlpPolicy::validate() const {
  if (id.empty()) throw std::invalid_argument("policy has no id");
  if (layers.empty()) throw std::invalid_argument("policy " + id + ": no layers");
  for (size_t i = 0; i < layers.size(); ++i) {
    layers[i].validate();
    if (i > 0 && layers[i].in_dim != layers[i - 1].out_dim)
      throw std::invalid_argument("policy " + id + ": layer " + layers[i].name +
                               " input does not match preceding output");
  }
}

std::vector<LayerSpec> make_policy_layers(int obs_dim, int hidden, int action_dim) {
  auto affine = [](const std::string& name, int in, int out, bool fused) {
    LayerSpec l;
    l.name = name;
    l.kind = LayerKind::affine;
    l.in_dim = in;
    l.out_dim = out;
    l.fused_relu = fused;
    l.W = Eigen::MatrixXd::Zero(out, in);
    l.b = Eigen::VectorXd::Zero(out);
    return l;
  };
  auto relu = [](const std::string& name, int dim) {
    LayerSpec l;
    l.name = name;
    l.kind = LayerKind::relu;
    l.in_dim = dim;
    l.out_dim = dim;
    return l;
  };
  std::vector<LayerSpec> layers;
  layers.push_back(affine("encoder", obs_dim, hidden, true));
  layers.push_back(affine("fc0", hidden, hidden, false));
  layers.push_back(relu("relu0", hidden));
  layers.push_back(affine("fc1", hidden, hidden, false));
  layers.push_back(relu("relu1", hidden));
  layers.push_back(affine("fc_out", hidden, action_dim, false));
  return layers;
}

std::vector<LayerSpec> make_critic_layers(int in_dim, int hidden) {
  std::vector<LayerSpec> layers;
  LayerSpec l0;
  l0.name = "q0";
  l0.kind = LayerKind::affine;
  l0.in_dim = in_dim;
  l0.out_dim = hidden;
  l0.fused_relu = true;
  l0.W = Eigen::MatrixXd::Zero(hidden, in_dim);
  l0.b = Eigen::VectorXd::Zero(hidden);
  LayerSpec l1;
  l1.name = "q1";
  l1.kind = LayerKind::affine;
  l1.in_dim = hidden;
  l1.out_dim = 1;
  l1.W = Eigen::MatrixXd::Zero(1, hidden);
  l1.b = Eigen::VectorXd::Zero(1);
  return {l0, l1};
}

void init_layer_weights(std::vector<LayerSpec>& layers, Rng& rng) {
  for (auto& l : layers) {
    if (l.kind != LayerKind::affine) continue;
    double scale = 1.0 / std::sqrt(static_cast<double>(l.in_dim));
    for (int i = 0; i < l.out_dim; ++i)
      for (int j = 0; j < l.in_dim; ++j) l.W(i, j) = scale * rng.gauss();
    l.b.setZero();
  }
}

namespace {

Eigen::VectorXd apply_layer(const LayerSpec& l, const Eigen::VectorXd& x) {
  if (l.kind == LayerKind::relu) return x.cwiseMax(0.0);
  Eigen::VectorXd y = l.W * x + l.b;
  if (l.fused_relu) y = y.cwiseMax(0.0);
  return y;
}

}  // namespace

Eigen::VectorXd mlp_eval(const std::vector<LayerSpec>& layers, const Eigen::VectorXd& input) {
  if (layers.empty()) throw std::invalid_argument("empty layer stack");
  if (input.size() != layers.front().in_dim)
    throw std::invalid_argument("input dimension mismatch: got " + std::to_string(input.size()) +
                             ", expected " + std::to_string(layers.front().in_dim));
  Eigen::VectorXd x = input;
  for (const auto& l : layers) x = apply_layer(l, x);
  return x;
}

Eigen::MatrixXd mlp_batch_eval(const std::vector<LayerSpec>& layers, const Eigen::MatrixXd& rows) {
  if (layers.empty()) throw std::invalid_argument("empty layer stack");
  if (rows.cols() != layers.front().in_dim)
    throw std::invalid_argument("input dimension mismatch: got " + std::to_string(rows.cols()) +
                             ", expected " + std::to_string(layers.front().in_dim));
  Eigen::MatrixXd z = rows;
  for (const auto& l : layers) {
    if (l.kind == LayerKind::relu) {
      z = z.cwiseMax(0.0);
      continue;
    }
    z = (z * l.W.transpose()).rowwise() + l.b.transpose();
    if (l.fused_relu) z = z.cwiseMax(0.0);
  }
  return z;
}

std::pair<Eigen::VectorXd, std::map<std::string, Eigen::VectorXd>> forward_with_taps(
    const MlpPolicy& policy, const Eigen::VectorXd& obs) {
  if (policy.layers.empty()) throw std::invalid_argument("policy " + policy.id + ": no layers");
  if (obs.size() != policy.obs_dim())
    throw std::invalid_argument("observation dimension mismatch: got " + std::to_string(obs.size()) +
                             ", expected " + std::to_string(policy.obs_dim()));
  if (!obs.allFinite()) throw std::invalid_argument("non-finite observation");
  std::map<std::string, Eigen::VectorXd> taps;
  Eigen::VectorXd x = obs;
  for (const auto& l : policy.layers) {
    x = apply_layer(l, x);
    taps[l.name] = x;
  }
  Eigen::VectorXd action = x.cwiseMax(-1.0).cwiseMin(1.0);
  return {action, taps};
}

Eigen::VectorXd policy_action(const MlpPolicy& policy, const Eigen::VectorXd& obs) {
  Eigen::VectorXd x = mlp_eval(policy.layers, obs);
  return x.cwiseMax(-1.0).cwiseMin(1.0);
}

std::map<std::string, Eigen::MatrixXd> batch_taps(const MlpPolicy& policy,
                                                  const Eigen::MatrixXd& obs_rows) {
  if (policy.layers.empty()) throw std::invalid_argument("policy " + policy.id + ": no layers");
  if (obs_rows.cols() != policy.obs_dim())
    throw std::invalid_argument("observation dimension mismatch: got " +
                             std::to_string(obs_rows.cols()) + ", expected " +
                             std::to_string(policy.obs_dim()));
  // Row-at-a-time on purpose: rollout collection taps per-step vectors, and
  // scoring the same observations must reproduce those taps bit for bit.
  std::map<std::string, Eigen::MatrixXd> taps;
  for (const auto& l : policy.layers) taps[l.name] = Eigen::MatrixXd(obs_rows.rows(), l.out_dim);
  for (Eigen::Index r = 0; r < obs_rows.rows(); ++r) {
    Eigen::VectorXd x = obs_rows.row(r).transpose();
    for (const auto& l : policy.layers) {
      x = apply_layer(l, x);
      taps[l.name].row(r) = x.transpose();
    }
  }
  return taps;
}

int n_params(const std::vector<LayerSpec>& layers) {
  int n = 0;
  for (const auto& l : layers)
    if (l.kind == LayerKind::affine) n += l.out_dim * l.in_dim + l.out_dim;
  return n;
}

Eigen::VectorXd get_params(const std::vector<LayerSpec>& layers) {
  Eigen::VectorXd theta(n_params(layers));
  int k = 0;
  for (const auto& l : layers) {
    if (l.kind != LayerKind::affine) continue;
    for (int i = 0; i < l.out_dim; ++i)
      for (int j = 0; j < l.in_dim; ++j) theta(k++) = l.W(i, j);
    for (int i = 0; i < l.out_dim; ++i) theta(k++) = l.b(i);
  }
  return theta;
}

void set_params(std::vector<LayerSpec>& layers, const Eigen::VectorXd& theta) {
  if (theta.size() != n_params(layers)) throw std::invalid_argument("parameter vector size mismatch");
  int k = 0;
  for (auto& l : layers) {
    if (l.kind != LayerKind::affine) continue;
    for (int i = 0; i < l.out_dim; ++i)
      for (int j = 0; j < l.in_dim; ++j) l.W(i, j) = theta(k++);
    for (int i = 0; i < l.out_dim; ++i) l.b(i) = theta(k++);
  }
}

void save_weights(const std::vector<LayerSpec>& layers, const std::filesystem::path& path) {
  std::string out;
  for (const auto& l : layers) {
    out += "layer " + l.name + " " + layer_kind_name(l.kind) + " " + std::to_string(l.in_dim) +
           " " + std::to_string(l.out_dim) + "\n";
    if (l.kind != LayerKind::affine) continue;
    for (int i = 0; i < l.out_dim; ++i) {
      for (int j = 0; j < l.in_dim; ++j) {
        if (j) out += ' ';
        out += fmt_double(l.W(i, j));
      }
      out += '\n';
    }
    for (int i = 0; i < l.out_dim; ++i) {
      if (i) out += ' ';
      out += fmt_double(l.b(i));
    }
    out += '\n';
  }
  atomic_write_file(path, out);
}

std::vector<LayerSpec> load_weights(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::vector<LayerSpec> layers;
  std::string line;
  auto parse_row = [&](int width, const std::string& ctx) {
    if (!std::getline(in, line)) throw std::runtime_error("weights file truncated at " + ctx);
    auto tok = split_ws(line);
    if (static_cast<int>(tok.size()) != width) throw std::runtime_error("bad row width at " + ctx);
    Eigen::RowVectorXd row(width);
    for (int j = 0; j < width; ++j) row(j) = std::stod(tok[j]);
    return row;
  };
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    auto tok = split_ws(line);
    if (tok.size() != 5 || tok[0] != "layer")
      throw std::runtime_error("bad layer header in " + path.string() + ": " + line);
    LayerSpec l;
    l.name = tok[1];
    l.kind = layer_kind_from(tok[2]);
    l.in_dim = std::stoi(tok[3]);
    l.out_dim = std::stoi(tok[4]);
    l.fused_relu = (l.kind == LayerKind::affine && (l.name == "encoder" || l.name == "q0"));
    if (l.kind == LayerKind::affine) {
      l.W.resize(l.out_dim, l.in_dim);
      for (int i = 0; i < l.out_dim; ++i) l.W.row(i) = parse_row(l.in_dim, l.name);
      l.b = parse_row(l.out_dim, l.name + " bias").transpose();
    }
    l.validate();
    layers.push_back(std::move(l));
  }
  if (layers.empty()) throw std::runtime_error("no layers in " + path.string());
  return layers;
}

void save_policy(const MlpPolicy& policy, const std::filesystem::path& dir) {
  policy.validate();
  std::string weights_name = policy.id + ".weights.txt";
  save_weights(policy.layers, dir / weights_name);
  nlohmann::json j;
  j["id"] = policy.id;
  j["dr_config"] = policy.dr_config;
  j["seed"] = policy.seed;
  j["weights_file"] = weights_name;
  std::vector<std::string> names;
  for (const auto& l : policy.layers) names.push_back(l.name);
  j["layers"] = names;
  j["budget"] = policy.budget;
  atomic_write_file(dir / (policy.id + ".json"), j.dump(2) + "\n");
}

MlpPolicy load_policy(const std::filesystem::path& manifest_path) {
  auto j = nlohmann::json::parse(read_file(manifest_path));
  MlpPolicy p;
  p.id = j.at("id").get<std::string>();
  p.dr_config = j.at("dr_config").get<std::string>();
  p.seed = j.at("seed").get<uint64_t>();
  p.budget = j.value("budget", 0);
  auto weights_path = manifest_path.parent_path() / j.at("weights_file").get<std::string>();
  p.layers = load_weights(weights_path);
  auto names = j.at("layers").get<std::vector<std::string>>();
  if (names.size() != p.layers.size())
    throw std::runtime_error("manifest layer list does not match weights file: " +
                             manifest_path.string());
  for (size_t i = 0; i < names.size(); ++i)
    if (names[i] != p.layers[i].name)
      throw std::runtime_error("manifest layer list does not match weights file: " +
                               manifest_path.string());
  p.validate();
  return p;
}

}  // namespace vsdr
