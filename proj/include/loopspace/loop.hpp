#pragma once

#include "fourier.hpp"
#include "hash.hpp"
#include "manifold.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>
#include <random>
#include <stdexcept>

namespace loopspace {

/// A closed loop in the torus, stored on the universal cover:
///   q(t) = base + W t + Σ_k a_k (cos 2πkt − 1) + b_k sin 2πkt,
/// with W_c = winding_c · L_c, so that q(0) = base.
struct LoopPath {
  Eigen::VectorXi winding;
  Eigen::VectorXd base;
  Eigen::MatrixXd cos_coeffs;  // J×n, row k−1 holds a_k
  Eigen::MatrixXd sin_coeffs;  // J×n, row k−1 holds b_k

  int dim() const { return static_cast<int>(base.size()); }
  int modes() const { return static_cast<int>(cos_coeffs.rows()); }

  void validate(const ModelManifold& m) const {
    if (base.size() != m.dim() || winding.size() != m.dim())
      throw std::invalid_argument("LoopPath: dimension does not match manifold");
    if (cos_coeffs.cols() != m.dim() || sin_coeffs.cols() != m.dim() ||
        cos_coeffs.rows() != sin_coeffs.rows())
      throw std::invalid_argument("LoopPath: coefficient shape mismatch");
    if (!base.allFinite() || !cos_coeffs.allFinite() || !sin_coeffs.allFinite())
      throw std::invalid_argument("LoopPath: non-finite coefficient");
  }

  std::uint64_t hash() const {
    Fnv1a h;
    h.values(winding.cast<double>()).values(base).values(cos_coeffs).values(sin_coeffs);
    return h.digest();
  }
};

inline Eigen::VectorXd winding_velocity(const ModelManifold& m, const LoopPath& q) {
  Eigen::VectorXd w(m.dim());
  for (int c = 0; c < m.dim(); ++c) w(c) = q.winding(c) * m.period(c);
  return w;
}

inline LoopPath straight_loop(const ModelManifold& m, const Eigen::VectorXi& winding,
                              int modes = 0) {
  LoopPath q;
  q.winding = winding;
  q.base = Eigen::VectorXd::Zero(m.dim());
  q.cos_coeffs = Eigen::MatrixXd::Zero(modes, m.dim());
  q.sin_coeffs = Eigen::MatrixXd::Zero(modes, m.dim());
  q.validate(m);
  return q;
}

/// Random smooth loop; the k-th mode has amplitude ≲ amplitude / k².
template <typename Rng>
LoopPath random_loop(const ModelManifold& m, Rng& rng, int modes, double amplitude,
                     int max_winding = 2) {
  std::uniform_int_distribution<int> wind(-max_winding, max_winding);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  LoopPath q = straight_loop(m, Eigen::VectorXi::Zero(m.dim()), modes);
  for (int c = 0; c < m.dim(); ++c) {
    q.winding(c) = wind(rng);
    q.base(c) = unit(rng) * m.period(c);
  }
  for (int k = 1; k <= modes; ++k)
    for (int c = 0; c < m.dim(); ++c) {
      q.cos_coeffs(k - 1, c) = amplitude * unit(rng) / (k * k);
      q.sin_coeffs(k - 1, c) = amplitude * unit(rng) / (k * k);
    }
  return q;
}

inline Eigen::VectorXd evaluate_loop(const ModelManifold& m, const LoopPath& q, double t) {
  Eigen::VectorXd x = q.base + winding_velocity(m, q) * t;
  for (int k = 1; k <= q.modes(); ++k) {
    const double ck = std::cos(kTwoPi * k * t) - 1.0;
    const double sk = std::sin(kTwoPi * k * t);
    x += ck * q.cos_coeffs.row(k - 1).transpose() + sk * q.sin_coeffs.row(k - 1).transpose();
  }
  return x;
}

inline Eigen::VectorXd loop_velocity(const ModelManifold& m, const LoopPath& q, double t) {
  Eigen::VectorXd v = winding_velocity(m, q);
  for (int k = 1; k <= q.modes(); ++k) {
    const double w = kTwoPi * k;
    v += -w * std::sin(w * t) * q.cos_coeffs.row(k - 1).transpose() +
         w * std::cos(w * t) * q.sin_coeffs.row(k - 1).transpose();
  }
  return v;
}

/// Positions (nodes×n, on the cover) at t_i = i/nodes.
inline Eigen::MatrixXd sample_loop(const ModelManifold& m, const LoopPath& q, int nodes) {
  Eigen::MatrixXd x(nodes, m.dim());
  for (int i = 0; i < nodes; ++i)
    x.row(i) = evaluate_loop(m, q, static_cast<double>(i) / nodes).transpose();
  return x;
}

inline Eigen::MatrixXd sample_velocity(const ModelManifold& m, const LoopPath& q, int nodes) {
  Eigen::MatrixXd v(nodes, m.dim());
  for (int i = 0; i < nodes; ++i)
    v.row(i) = loop_velocity(m, q, static_cast<double>(i) / nodes).transpose();
  return v;
}

/// q̇ as an element of the truncated space V_J (exact when J ≥ loop modes).
inline Eigen::VectorXd velocity_coefficients(const ModelManifold& m, const LoopPath& q,
                                             const FourierBasis& basis) {
  if (basis.dim() != m.dim()) throw std::invalid_argument("velocity_coefficients: dimension");
  if (basis.modes() < q.modes())
    throw std::invalid_argument("velocity_coefficients: loop has more modes than the basis");
  Eigen::VectorXd out = basis.constant(winding_velocity(m, q));
  for (int k = 1; k <= q.modes(); ++k) {
    const double w = kTwoPi * k / std::numbers::sqrt2;
    for (int c = 0; c < m.dim(); ++c) {
      out(basis.index_cos(k, c)) = w * q.sin_coeffs(k - 1, c);
      out(basis.index_sin(k, c)) = -w * q.cos_coeffs(k - 1, c);
    }
  }
  return out;
}

/// exp_q(h) for h ∈ V_J. On a flat torus this is q + h on the cover.
inline LoopPath displaced(const ModelManifold& m, const LoopPath& q, const FourierBasis& basis,
                          const Eigen::VectorXd& h) {
  if (basis.dim() != m.dim() || h.size() != basis.size())
    throw std::invalid_argument("displaced: shape mismatch");
  const int modes = std::max(q.modes(), basis.modes());
  LoopPath out = straight_loop(m, q.winding, modes);
  out.base = q.base + basis.evaluate(h, 0.0);
  out.cos_coeffs.topRows(q.modes()) = q.cos_coeffs;
  out.sin_coeffs.topRows(q.modes()) = q.sin_coeffs;
  for (int k = 1; k <= basis.modes(); ++k)
    for (int c = 0; c < m.dim(); ++c) {
      out.cos_coeffs(k - 1, c) += std::numbers::sqrt2 * h(basis.index_cos(k, c));
      out.sin_coeffs(k - 1, c) += std::numbers::sqrt2 * h(basis.index_sin(k, c));
    }
  return out;
}

/// ½ ∫ |q̇|² dt, computed from Parseval.
inline double loop_energy(const ModelManifold& m, const LoopPath& q) {
  const FourierBasis basis(m.dim(), q.modes());
  return 0.5 * velocity_coefficients(m, q, basis).squaredNorm();
}

}  // namespace loopspace
