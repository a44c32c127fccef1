#include "vsdr/combiner.hpp"

#include <array>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "vsdr/io_util.hpp"

namespace vsdr {

Eigen::VectorXd minmax_normalize(const Eigen::VectorXd& v) {
  if (v.size() == 0) throw std::invalid_argument("cannot normalize an empty vector");
  if (!v.allFinite()) throw std::invalid_argument("cannot normalize a non-finite vector");
  double lo = v.minCoeff();
  double hi = v.maxCoeff();
  if (hi == lo) return Eigen::VectorXd::Ones(v.size());
  return ((v.array() - lo) / (hi - lo)).matrix();
}

Eigen::VectorXd vsdr_scores(const Eigen::VectorXd& s, const Eigen::VectorXd& r) {
  if (s.size() != r.size()) throw std::invalid_argument("score vector length mismatch");
  return minmax_normalize(s).cwiseProduct(minmax_normalize(r));
}

Eigen::VectorXd combine_generic(const Eigen::VectorXd& s, const Eigen::VectorXd& b) {
  return vsdr_scores(s, b);
}

std::string ScoreCell::key() const {
  return "val-" + validation_type + "_met-" + metric + "_layer-" + layer + "_n-" +
         std::to_string(n_components) + "_proto-" + protocol;
}

void ScoreTable::validate() const {
  int n = rows();
  if (n == 0) throw std::invalid_argument("score table has no rows");
  for (const auto* v : {&s, &r, &s_norm, &r_norm, &vsdr, &opc, &soft_opc})
    if (v->size() != n) throw std::invalid_argument("score table column length mismatch");
  if ((vsdr - s_norm.cwiseProduct(r_norm)).cwiseAbs().maxCoeff() != 0.0)
    throw std::invalid_argument("vsdr column is not the product of the normalized columns");
  for (const auto* v : {&s_norm, &r_norm, &vsdr})
    if (v->minCoeff() < 0.0 || v->maxCoeff() > 1.0)
      throw std::invalid_argument("normalized scores must lie in [0,1]");
}

ScoreTable make_score_table(const ScoreCell& cell, const std::vector<std::string>& policy_ids,
                            const Eigen::VectorXd& s, const Eigen::VectorXd& r,
                            const Eigen::VectorXd& opc, const Eigen::VectorXd& soft_opc) {
  ScoreTable t;
  t.cell = cell;
  t.policy_ids = policy_ids;
  t.s = s;
  t.r = r;
  t.s_norm = minmax_normalize(s);
  t.r_norm = minmax_normalize(r);
  t.vsdr = t.s_norm.cwiseProduct(t.r_norm);
  t.opc = opc;
  t.soft_opc = soft_opc;
  t.validate();
  return t;
}

void save_score_table(const ScoreTable& table, const std::filesystem::path& path) {
  table.validate();
  std::string out = "policy_id,s,r,s_norm,r_norm,vsdr,opc,soft_opc\n";
  for (int i = 0; i < table.rows(); ++i) {
    out += table.policy_ids[i];
    for (const auto* v : {&table.s, &table.r, &table.s_norm, &table.r_norm, &table.vsdr,
                          &table.opc, &table.soft_opc}) {
      out += ',';
      out += fmt_double((*v)(i));
    }
    out += '\n';
  }
  atomic_write_file(path, out);
}

ScoreTable load_score_table(const std::filesystem::path& path, const ScoreCell& cell) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line) || trim(line) != "policy_id,s,r,s_norm,r_norm,vsdr,opc,soft_opc")
    throw std::runtime_error("bad score table header in " + path.string());
  ScoreTable t;
  t.cell = cell;
  std::vector<std::array<double, 7>> rows;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    std::vector<std::string> fields;
    std::istringstream ls(line);
    std::string field;
    while (std::getline(ls, field, ',')) fields.push_back(field);
    if (fields.size() != 8) throw std::runtime_error("bad score table row in " + path.string());
    t.policy_ids.push_back(fields[0]);
    std::array<double, 7> vals{};
    for (int i = 0; i < 7; ++i) vals[i] = std::stod(fields[i + 1]);
    rows.push_back(vals);
  }
  int n = static_cast<int>(rows.size());
  for (auto* v : {&t.s, &t.r, &t.s_norm, &t.r_norm, &t.vsdr, &t.opc, &t.soft_opc}) v->resize(n);
  for (int i = 0; i < n; ++i) {
    t.s(i) = rows[i][0];
    t.r(i) = rows[i][1];
    t.s_norm(i) = rows[i][2];
    t.r_norm(i) = rows[i][3];
    t.vsdr(i) = rows[i][4];
    t.opc(i) = rows[i][5];
    t.soft_opc(i) = rows[i][6];
  }
  t.validate();
  return t;
}

}  // namespace vsdr
