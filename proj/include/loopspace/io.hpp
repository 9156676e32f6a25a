#pragma once

#include "flow.hpp"
#include "hamiltonian.hpp"
#include "hash.hpp"
#include "loop.hpp"
#include "manifold.hpp"
#include "spectral.hpp"

#include <json.hpp>

#include <Eigen/Dense>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace loopspace {

using json = nlohmann::ordered_json;

inline constexpr const char* kToolVersion = "0.3.0";

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  try {
    return json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

// ---- loops ----------------------------------------------------------------

inline json loop_to_json(const LoopPath& q) {
  json j;
  j["winding"] = json::array();
  for (int c = 0; c < q.dim(); ++c) j["winding"].push_back(q.winding(c));
  j["base"] = json::array();
  for (int c = 0; c < q.dim(); ++c) j["base"].push_back(q.base(c));
  auto rows = [&](const Eigen::MatrixXd& m) {
    json a = json::array();
    for (int k = 0; k < m.rows(); ++k) {
      json row = json::array();
      for (int c = 0; c < m.cols(); ++c) row.push_back(m(k, c));
      a.push_back(row);
    }
    return a;
  };
  j["cos"] = rows(q.cos_coeffs);
  j["sin"] = rows(q.sin_coeffs);
  return j;
}

inline LoopPath loop_from_json(const json& j, const ModelManifold& m) {
  try {
    LoopPath q = straight_loop(m, Eigen::VectorXi::Zero(m.dim()), 0);
    const auto w = j.at("winding").get<std::vector<int>>();
    if (static_cast<int>(w.size()) != m.dim()) throw ConfigError("loop: winding has wrong length");
    for (int c = 0; c < m.dim(); ++c) q.winding(c) = w[c];
    if (j.contains("base")) {
      const auto b = j.at("base").get<std::vector<double>>();
      if (static_cast<int>(b.size()) != m.dim()) throw ConfigError("loop: base has wrong length");
      for (int c = 0; c < m.dim(); ++c) q.base(c) = b[c];
    }
    auto rows = [&](const char* key) {
      const auto v = j.value(key, std::vector<std::vector<double>>{});
      Eigen::MatrixXd mat(static_cast<int>(v.size()), m.dim());
      for (std::size_t k = 0; k < v.size(); ++k) {
        if (static_cast<int>(v[k].size()) != m.dim()) throw ConfigError(std::string("loop: bad row in ") + key);
        for (int c = 0; c < m.dim(); ++c) mat(static_cast<int>(k), c) = v[k][c];
      }
      return mat;
    };
    q.cos_coeffs = rows("cos");
    q.sin_coeffs = rows("sin");
    if (q.cos_coeffs.rows() != q.sin_coeffs.rows()) {
      const int jm = static_cast<int>(std::max(q.cos_coeffs.rows(), q.sin_coeffs.rows()));
      Eigen::MatrixXd a = Eigen::MatrixXd::Zero(jm, m.dim()), b = a;
      a.topRows(q.cos_coeffs.rows()) = q.cos_coeffs;
      b.topRows(q.sin_coeffs.rows()) = q.sin_coeffs;
      q.cos_coeffs = a;
      q.sin_coeffs = b;
    }
    q.validate(m);
    return q;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("loop: ") + e.what());
  }
}

inline ModelManifold model_from_json(const json& j) {
  const std::string kind = j.value("kind", std::string("flat-torus"));
  if (kind == "flat-torus") return ModelManifold::flat_torus(j.value("dim", 2));
  if (kind == "circle" || kind == "embedded-circle") return ModelManifold::embedded_circle();
  throw ConfigError("model: unknown kind " + kind);
}

inline json model_to_json(const ModelManifold& m) {
  if (m.name() == "circle") return {{"kind", "circle"}};
  return {{"kind", "flat-torus"}, {"dim", m.dim()}};
}

// ---- specs ----------------------------------------------------------------

inline json spec_to_json(const HamiltonianSpec& s) {
  return {{"rho0", s.rho0}, {"rho1", s.rho1}, {"rho_star", s.rho_star}, {"delta", s.delta},
          {"r", s.r},       {"J", s.J},       {"s", s.s}};
}

inline HamiltonianSpec spec_from_json(const json& j, HamiltonianSpec s = {}) {
  try {
    s.rho0 = j.value("rho0", s.rho0);
    s.rho1 = j.value("rho1", s.rho1);
    s.rho_star = j.value("rho_star", s.rho_star);
    s.delta = j.value("delta", s.delta);
    s.r = j.value("r", s.r);
    s.J = j.value("J", s.J);
    s.s = j.value("s", s.s);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("hamiltonian: ") + e.what());
  }
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return s;
}

inline json flow_to_json(const FlowConfig& c) {
  return {{"s", c.s},
          {"J", c.J},
          {"gamma", c.gamma},
          {"gamma_prime", c.gamma_prime},
          {"gamma_dprime", c.gamma_dprime},
          {"epsilon", c.epsilon},
          {"t0", c.t0},
          {"dt", c.dt},
          {"grad_tol", c.grad_tol},
          {"t_max", c.t_max},
          {"accept_steps", c.accept_steps},
          {"max_halvings", c.max_halvings},
          {"stationary_floor", c.stationary_floor}};
}

inline FlowConfig flow_from_json(const json& j, FlowConfig c = {}) {
  try {
    c.s = j.value("s", c.s);
    c.J = j.value("J", c.J);
    c.gamma = j.value("gamma", c.gamma);
    c.gamma_prime = j.value("gamma_prime", c.gamma_prime);
    c.gamma_dprime = j.value("gamma_dprime", c.gamma_dprime);
    c.epsilon = j.value("epsilon", c.epsilon);
    c.t0 = j.value("t0", c.t0);
    c.dt = j.value("dt", c.dt);
    c.grad_tol = j.value("grad_tol", c.grad_tol);
    c.t_max = j.value("t_max", c.t_max);
    c.accept_steps = j.value("accept_steps", c.accept_steps);
    c.max_halvings = j.value("max_halvings", c.max_halvings);
    c.stationary_floor = j.value("stationary_floor", c.stationary_floor);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("flow: ") + e.what());
  }
  return c;
}

inline json frame_to_json(const SpectralFrame& f) {
  json j;
  j["method"] = f.method == FrameMethod::Dense ? "dense" : "analytic";
  j["modes"] = f.basis.modes();
  j["dimension"] = f.size();
  j["kernel_dim"] = f.kernel_dim;
  j["loop_hash"] = Fnv1a::to_hex(f.loop_hash);
  j["eigenvalues"] = std::vector<double>(f.eigenvalues.data(), f.eigenvalues.data() + f.size());
  if (!f.identity()) {
    json v = json::array();
    for (int k = 0; k < f.size(); ++k) {
      const Eigen::VectorXd col = f.vectors->col(k);
      v.push_back(std::vector<double>(col.data(), col.data() + col.size()));
    }
    j["eigenvectors"] = std::move(v);
  }
  return j;
}

// ---- manifests and CSV ----------------------------------------------------

struct RunManifest {
  std::string command;
  json config;
  std::uint64_t seed = 0;
  std::vector<std::string> artifacts;
  std::string version = kToolVersion;

  json to_json() const {
    return {{"command", command}, {"version", version}, {"seed", seed}, {"config", config}, {"artifacts", artifacts}};
  }
  static RunManifest from_json(const json& j) {
    RunManifest m;
    m.command = j.at("command").get<std::string>();
    m.version = j.at("version").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.config = j.at("config");
    m.artifacts = j.at("artifacts").get<std::vector<std::string>>();
    return m;
  }
  /// Hash of everything that determines the outputs.
  std::string hash() const {
    json key = {{"command", command}, {"version", version}, {"seed", seed}, {"config", config}};
    return Fnv1a().text(key.dump()).hex();
  }
  bool operator==(const RunManifest& o) const { return to_json() == o.to_json(); }
};

inline std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (x == 0.0) x = 0.0;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  CsvTable& row(const std::vector<std::string>& cells) {
    if (cells.size() != header_.size()) throw std::logic_error("CsvTable: row width mismatch");
    rows_.push_back(cells);
    return *this;
  }

  std::size_t size() const { return rows_.size(); }

  std::string str(const std::string& manifest_hash) const {
    std::ostringstream out;
    emit(out, header_);
    for (const auto& r : rows_) emit(out, r);
    out << "# manifest " << manifest_hash << "\n";
    return out.str();
  }

 private:
  static void emit(std::ostringstream& out, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out << ',';
      const bool quote = cells[i].find_first_of(",\"\n") != std::string::npos;
      if (!quote) {
        out << cells[i];
        continue;
      }
      out << '"';
      for (char ch : cells[i]) out << (ch == '"' ? "\"\"" : std::string(1, ch));
      out << '"';
    }
    out << '\n';
  }

  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

}  // namespace loopspace
