#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "varma/calibrate.hpp"
#include "varma/likelihood.hpp"
#include "varma/simulate.hpp"

namespace varma {

using nlohmann::json;

namespace detail {

inline json vec_to_json(const VectorXd& v) {
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

inline json mat_to_json(const MatrixXd& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline VectorXd vec_from_json(const json& a) {
  VectorXd v(static_cast<Index>(a.size()));
  Index i = 0;
  for (const auto& x : a) v[i++] = x.get<double>();
  return v;
}

inline MatrixXd mat_from_json(const json& rows) {
  if (rows.empty()) return MatrixXd(0, 0);
  const Index r = static_cast<Index>(rows.size());
  const Index c = static_cast<Index>(rows.front().size());
  MatrixXd m(r, c);
  Index i = 0;
  for (const auto& row : rows) {
    if (static_cast<Index>(row.size()) != c)
      throw std::invalid_argument("model document: ragged matrix");
    Index j = 0;
    for (const auto& x : row) m(i, j++) = x.get<double>();
    ++i;
  }
  return m;
}

}  // namespace detail

/// Serializable model description: parameters plus optional fit metadata.
struct ModelDocument {
  int schema_version = 1;
  Index k = 1, p = 0, q = 0;
  VectorXd theta_free;  // theta_1..theta_q
  VectorXd mu;
  std::vector<MatrixXd> phi;
  MatrixXd omega;
  RegressorSet regs;
  MatrixXd det_coef;  // all deterministic coefficient rows, when fitted

  bool has_scores = false;
  double loglik = 0.0, aic = 0.0, bic = 0.0;

  bool has_fit_metadata = false;
  Index fit_t = 0;
  int seeds_used = 0;
  int iterations = 0;
  bool converged = false;
  bool boundary_flag = false;

  VarmaSpec to_spec() const {
    VarmaSpec spec;
    spec.k = k;
    spec.p = p;
    spec.q = q;
    spec.theta = ThetaPoly::from_free(theta_free);
    spec.mu = mu;
    spec.phi = phi;
    spec.omega = omega;
    spec.validate();
    return spec;
  }

  static ModelDocument from_fit(const FitResult& fit, const RegressorSet& regs) {
    ModelDocument doc;
    doc.k = fit.k;
    doc.p = fit.p;
    doc.q = fit.q;
    doc.theta_free = fit.theta.free_coef();
    doc.mu = fit.mu;
    doc.phi = fit.phi;
    doc.omega = fit.omega;
    doc.regs = regs;
    doc.det_coef = fit.det_coef;
    doc.has_scores = true;
    doc.loglik = fit.loglik;
    doc.aic = fit.aic;
    doc.bic = fit.bic;
    doc.has_fit_metadata = true;
    doc.fit_t = fit.t_len;
    doc.seeds_used = static_cast<int>(fit.starts.size());
    int iters = 0;
    for (const auto& s : fit.starts) iters += s.iterations;
    doc.iterations = iters;
    doc.converged = fit.best_start < 0 ||
                    fit.starts[static_cast<std::size_t>(fit.best_start)].converged;
    doc.boundary_flag = fit.boundary_flag;
    return doc;
  }

  static ModelDocument from_spec(const VarmaSpec& spec) {
    ModelDocument doc;
    doc.k = spec.k;
    doc.p = spec.p;
    doc.q = spec.q;
    doc.theta_free = spec.theta.free_coef();
    doc.mu = spec.mu;
    doc.phi = spec.phi;
    doc.omega = spec.omega;
    return doc;
  }
};

inline json to_json(const ModelDocument& doc) {
  json j;
  j["schema_version"] = doc.schema_version;
  j["k"] = doc.k;
  j["p"] = doc.p;
  j["q"] = doc.q;
  j["theta"] = detail::vec_to_json(doc.theta_free);
  j["mu"] = detail::vec_to_json(doc.mu);
  json phis = json::array();
  for (const auto& m : doc.phi) phis.push_back(detail::mat_to_json(m));
  j["phi"] = std::move(phis);
  j["omega"] = detail::mat_to_json(doc.omega);
  j["regressors"] = {{"constant", doc.regs.constant},
                     {"trend_degree", doc.regs.trend_degree},
                     {"seasonal_period", doc.regs.seasonal_period}};
  if (doc.det_coef.size() > 0) j["det_coef"] = detail::mat_to_json(doc.det_coef);
  if (doc.has_scores) {
    j["loglik"] = doc.loglik;
    j["aic"] = doc.aic;
    j["bic"] = doc.bic;
  }
  if (doc.has_fit_metadata)
    j["fit"] = {{"T", doc.fit_t},
                {"seeds", doc.seeds_used},
                {"iterations", doc.iterations},
                {"converged", doc.converged},
                {"boundary", doc.boundary_flag}};
  return j;
}

inline ModelDocument model_from_json(const json& j) {
  ModelDocument doc;
  doc.schema_version = j.at("schema_version").get<int>();
  if (doc.schema_version != 1)
    throw std::invalid_argument("model document: unsupported schema version");
  doc.k = j.at("k").get<Index>();
  doc.p = j.at("p").get<Index>();
  doc.q = j.at("q").get<Index>();
  doc.theta_free = detail::vec_from_json(j.at("theta"));
  doc.mu = detail::vec_from_json(j.at("mu"));
  for (const auto& m : j.at("phi")) doc.phi.push_back(detail::mat_from_json(m));
  doc.omega = detail::mat_from_json(j.at("omega"));
  if (j.contains("regressors")) {
    const auto& r = j.at("regressors");
    doc.regs.constant = r.at("constant").get<bool>();
    doc.regs.trend_degree = r.at("trend_degree").get<int>();
    doc.regs.seasonal_period = r.at("seasonal_period").get<int>();
  }
  if (j.contains("det_coef")) doc.det_coef = detail::mat_from_json(j.at("det_coef"));
  if (j.contains("loglik")) {
    doc.has_scores = true;
    doc.loglik = j.at("loglik").get<double>();
    doc.aic = j.value("aic", 0.0);
    doc.bic = j.value("bic", 0.0);
  }
  if (j.contains("fit")) {
    const auto& f = j.at("fit");
    doc.has_fit_metadata = true;
    doc.fit_t = f.at("T").get<Index>();
    doc.seeds_used = f.at("seeds").get<int>();
    doc.iterations = f.at("iterations").get<int>();
    doc.converged = f.at("converged").get<bool>();
    doc.boundary_flag = f.at("boundary").get<bool>();
  }
  if (doc.theta_free.size() != doc.q || doc.mu.size() != doc.k ||
      static_cast<Index>(doc.phi.size()) != doc.p)
    throw std::invalid_argument("model document: inconsistent dimensions");
  return doc;
}

inline void write_model(const std::string& path, const ModelDocument& doc) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << to_json(doc).dump(2) << "\n";
}

inline ModelDocument read_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  json j;
  in >> j;
  return model_from_json(j);
}

/// Matrix-MA model document: coefficient lists beyond the implied identity
/// leading terms.
inline MatrixVarma read_matrix_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  json j;
  in >> j;
  MatrixVarma m;
  m.k = j.at("k").get<Index>();
  m.ma.push_back(MatrixXd::Identity(m.k, m.k));
  m.ar.push_back(MatrixXd::Identity(m.k, m.k));
  for (const auto& block : j.at("ma")) m.ma.push_back(detail::mat_from_json(block));
  for (const auto& block : j.at("ar")) m.ar.push_back(detail::mat_from_json(block));
  m.omega = j.contains("omega") ? detail::mat_from_json(j.at("omega"))
                                : MatrixXd::Identity(m.k, m.k);
  m.validate();
  return m;
}

// ---- CSV ----------------------------------------------------------------

inline MatrixXd read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    bool parse_ok = true;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        const double v = std::stod(cell, &used);
        while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) ++used;
        if (used != cell.size()) throw std::invalid_argument(cell);
        row.push_back(v);
      } catch (const std::exception&) {
        parse_ok = false;
        break;
      }
    }
    if (!parse_ok) {
      if (first) {  // header row
        first = false;
        continue;
      }
      throw std::invalid_argument("csv: non-numeric cell in data row: " + line);
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw std::invalid_argument("csv: ragged row");
    rows.push_back(std::move(row));
    first = false;
  }
  if (rows.empty()) throw std::invalid_argument("csv: no data rows");
  MatrixXd m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j)
      m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return m;
}

inline void write_csv(const std::string& path, const MatrixXd& m) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  for (Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << "x" << (j + 1);
  out << "\n";
  char buf[64];
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", m(i, j));
      out << (j ? "," : "") << buf;
    }
    out << "\n";
  }
}

}  // namespace varma
