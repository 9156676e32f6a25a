#pragma once

#include "field.hpp"
#include "fourier.hpp"
#include "loop.hpp"
#include "manifold.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <tuple>

namespace loopspace {

class FrameMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class SpectralFailure : public std::runtime_error {
 public:
  SpectralFailure(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

enum class FrameMethod { Auto, Analytic, Dense };

inline constexpr double kZeroEigenvalue = 1e-9;

/// Eigenvalues and eigenfields of ∇*∇ = −∇²_{q̇} along a loop, restricted to
/// the Fourier space V_J. Eigenfields are columns of `vectors` in Fourier
/// coordinates; for the analytic frame the matrix is the identity and is
/// not stored.
struct SpectralFrame {
  FourierBasis basis{1, 0};
  std::uint64_t loop_hash = 0;
  Eigen::VectorXd eigenvalues;
  std::shared_ptr<const Eigen::MatrixXd> vectors;
  int kernel_dim = 0;
  FrameMethod method = FrameMethod::Analytic;

  int size() const { return basis.size(); }
  bool identity() const { return !vectors; }

  Eigen::VectorXd to_frame(const Eigen::VectorXd& fourier) const {
    return identity() ? fourier : Eigen::VectorXd(vectors->transpose() * fourier);
  }
  Eigen::VectorXd to_fourier(const Eigen::VectorXd& frame) const {
    return identity() ? frame : Eigen::VectorXd((*vectors) * frame);
  }
  Eigen::VectorXd eigenfield(int j) const {
    return identity() ? Eigen::VectorXd(Eigen::VectorXd::Unit(size(), j))
                      : Eigen::VectorXd(vectors->col(j));
  }
  /// ∇_{q̇} written in frame coordinates.
  Eigen::VectorXd derivative(const Eigen::VectorXd& frame) const {
    return to_frame(basis.derivative(to_fourier(frame)));
  }

  bool same_as(const SpectralFrame& o) const {
    return loop_hash == o.loop_hash && basis == o.basis && method == o.method;
  }
};

using FramePtr = std::shared_ptr<const SpectralFrame>;

/// p = Σ p_j ξ_j.
struct FiberField {
  FramePtr frame;
  Eigen::VectorXd coeffs;

  static FiberField from_fourier(FramePtr f, const Eigen::VectorXd& c) {
    Eigen::VectorXd x = f->to_frame(c);
    return {std::move(f), std::move(x)};
  }
  Eigen::VectorXd fourier() const { return frame->to_fourier(coeffs); }
};

/// Galerkin matrix of ∇*∇ on V_J: G_ab = ⟨∇φ_a, ∇φ_b⟩_{L²}.
inline Eigen::MatrixXd laplacian_matrix(const ModelManifold& m, const LoopPath& q,
                                        const FourierBasis& basis) {
  const int nodes = quadrature_nodes(std::max(basis.modes(), q.modes()));
  const int d = basis.size();
  const Eigen::MatrixXd dmat = basis.derivative_matrix();
  Eigen::MatrixXd grads(nodes * m.dim(), d);
  for (int a = 0; a < d; ++a) {
    const Eigen::VectorXd phi = Eigen::VectorXd::Unit(d, a);
    const Eigen::MatrixXd dphi = basis.sample(dmat * phi, nodes);
    const Eigen::MatrixXd vals = basis.sample(phi, nodes);
    for (int i = 0; i < nodes; ++i) {
      const double t = static_cast<double>(i) / nodes;
      const Eigen::VectorXd g =
          dphi.row(i).transpose() +
          m.christoffel_contraction(evaluate_loop(m, q, t), loop_velocity(m, q, t),
                                    vals.row(i).transpose());
      grads.block(i * m.dim(), a, m.dim(), 1) = g;
    }
  }
  return grads.transpose() * grads / static_cast<double>(nodes);
}

inline int count_kernel(Eigen::VectorXd& evals) {
  int k = 0;
  for (Eigen::Index j = 0; j < evals.size(); ++j)
    if (std::abs(evals(j)) < kZeroEigenvalue) {
      evals(j) = 0.0;
      ++k;
    }
  return k;
}

inline SpectralFrame eigendecompose(const ModelManifold& m, const LoopPath& q, int modes,
                                    FrameMethod method = FrameMethod::Auto) {
  q.validate(m);
  if (modes < q.modes())
    throw std::invalid_argument("eigendecompose: cutoff below the loop's mode content");
  SpectralFrame f;
  f.basis = FourierBasis(m.dim(), modes);
  f.loop_hash = q.hash();
  const bool flat = m.curvature_bound() == 0.0;
  if (method == FrameMethod::Auto) method = flat ? FrameMethod::Analytic : FrameMethod::Dense;
  f.method = method;
  if (method == FrameMethod::Analytic) {
    if (!flat) throw std::invalid_argument("eigendecompose: analytic frame needs a flat model");
    f.eigenvalues.resize(f.size());
    for (int j = 0; j < f.size(); ++j) f.eigenvalues(j) = f.basis.laplacian_eigenvalue(j);
  } else {
    const Eigen::MatrixXd g = laplacian_matrix(m, q, f.basis);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
    if (es.info() != Eigen::Success) throw SpectralFailure("eigensolver did not converge", -1.0);
    f.eigenvalues = es.eigenvalues();
    auto v = std::make_shared<Eigen::MatrixXd>(es.eigenvectors());
    const double residual = (g * (*v) - (*v) * f.eigenvalues.asDiagonal()).cwiseAbs().maxCoeff();
    if (residual > 1e-8 * std::max(1.0, f.eigenvalues.cwiseAbs().maxCoeff()))
      throw SpectralFailure("eigen-residual too large", residual);
    f.vectors = std::move(v);
  }
  f.kernel_dim = count_kernel(f.eigenvalues);
  if (f.kernel_dim > m.dim())
    throw SpectralFailure("kernel dimension exceeds manifold dimension", f.kernel_dim);
  return f;
}

inline FramePtr make_frame(const ModelManifold& m, const LoopPath& q, int modes,
                           FrameMethod method = FrameMethod::Auto) {
  return std::make_shared<const SpectralFrame>(eigendecompose(m, q, modes, method));
}

/// Frame cache keyed by (loop hash, J, method). Concurrent lookups, exclusive
/// insertion.
class FrameCache {
 public:
  FramePtr get(const ModelManifold& m, const LoopPath& q, int modes,
               FrameMethod method = FrameMethod::Auto) {
    const Key key{q.hash(), modes, static_cast<int>(method)};
    {
      std::shared_lock lock(mutex_);
      if (auto it = frames_.find(key); it != frames_.end()) return it->second;
    }
    FramePtr f = make_frame(m, q, modes, method);
    std::unique_lock lock(mutex_);
    return frames_.try_emplace(key, std::move(f)).first->second;
  }
  std::size_t size() const {
    std::shared_lock lock(mutex_);
    return frames_.size();
  }

 private:
  using Key = std::tuple<std::uint64_t, int, int>;
  mutable std::shared_mutex mutex_;
  std::map<Key, FramePtr> frames_;
};

inline Eigen::VectorXd sobolev_weights(const SpectralFrame& f, double r) {
  return (1.0 + f.eigenvalues.array()).pow(r).matrix();
}

/// A^r p, coefficients scaled by (1+λ_j)^{r/2}.
inline FiberField fractional_apply(double r, const FiberField& p) {
  return {p.frame, sobolev_weights(*p.frame, 0.5 * r).cwiseProduct(p.coeffs)};
}

inline void require_same_frame(const FiberField& a, const FiberField& b) {
  if (a.frame != b.frame && !a.frame->same_as(*b.frame))
    throw FrameMismatch("fields are expressed in different frames");
}

/// ⟨ξ, ζ⟩_r = Σ (1+λ_j)^r ξ_j ζ_j
inline double inner_r(double r, const FiberField& xi, const FiberField& zeta) {
  require_same_frame(xi, zeta);
  return (sobolev_weights(*xi.frame, r).array() * xi.coeffs.array() * zeta.coeffs.array()).sum();
}

inline double norm_r(double r, const FiberField& p) { return std::sqrt(inner_r(r, p, p)); }

inline double norm_r(const SpectralFrame& f, double r, const Eigen::VectorXd& coeffs) {
  return std::sqrt((sobolev_weights(f, r).array() * coeffs.array().square()).sum());
}

/// ȷ*_{1−s} = (1+∇*∇)^{s−1}, the adjoint of H^{1−s} ⊂ L².
inline FiberField adjoint_inclusion(double s, const FiberField& v) {
  if (!(s > 0.5 && s < 1.0)) throw std::invalid_argument("adjoint_inclusion: s must lie in (1/2, 1)");
  return {v.frame, sobolev_weights(*v.frame, s - 1.0).cwiseProduct(v.coeffs)};
}

/// Galerkin matrix of 1 − d²/dt² acting on ι_*ξ, compressed to V_J:
///   E_ab = ⟨φ_a, φ_b⟩ + ⟨(ι_*φ_a)', (ι_*φ_b)'⟩.
/// Since (ι_*ξ)' = ι_*(∇ξ) + II(q̇, ξ) with the two parts orthogonal,
/// E = 1 + ∇*∇ + S where S ≥ 0 comes from the second fundamental form.
inline Eigen::MatrixXd embedded_operator(const ModelManifold& m, const LoopPath& q,
                                         const FourierBasis& basis) {
  q.validate(m);
  const int nodes = quadrature_nodes(std::max(basis.modes(), q.modes()));
  const int d = basis.size();
  const int amb = m.ambient_dim();
  const Eigen::MatrixXd dmat = basis.derivative_matrix();
  Eigen::MatrixXd rows(nodes * amb, d);
  Eigen::MatrixXd vals(nodes * m.dim(), d);
  std::vector<Eigen::VectorXd> xs(nodes), vs(nodes);
  for (int i = 0; i < nodes; ++i) {
    const double t = static_cast<double>(i) / nodes;
    xs[i] = evaluate_loop(m, q, t);
    vs[i] = loop_velocity(m, q, t);
  }
  for (int a = 0; a < d; ++a) {
    const Eigen::VectorXd phi = Eigen::VectorXd::Unit(d, a);
    const Eigen::MatrixXd v = basis.sample(phi, nodes);
    const Eigen::MatrixXd dv = basis.sample(dmat * phi, nodes);
    for (int i = 0; i < nodes; ++i) {
      const Eigen::VectorXd xi = v.row(i).transpose();
      rows.block(i * amb, a, amb, 1) =
          m.push(xs[i], dv.row(i).transpose()) + m.normal_term(xs[i], vs[i], xi);
      vals.block(i * m.dim(), a, m.dim(), 1) = xi;
    }
  }
  return (vals.transpose() * vals + rows.transpose() * rows) / static_cast<double>(nodes);
}

inline Eigen::MatrixXd symmetric_power(const Eigen::MatrixXd& a, double r) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
  if (es.info() != Eigen::Success) throw SpectralFailure("eigensolver did not converge", -1.0);
  const Eigen::VectorXd w = es.eigenvalues().array().max(0.0).pow(r).matrix();
  return es.eigenvectors() * w.asDiagonal() * es.eigenvectors().transpose();
}

/// Embedded Sobolev pairing ⟨E^r ξ, ζ⟩ on Fourier coefficients, r ∈ [−1, 1].
inline double inner_r_emb(const ModelManifold& m, const LoopPath& q, const FourierBasis& basis,
                          double r, const Eigen::VectorXd& xi, const Eigen::VectorXd& zeta) {
  if (r < -1.0 || r > 1.0) throw std::invalid_argument("inner_r_emb: r must lie in [-1, 1]");
  return xi.dot(symmetric_power(embedded_operator(m, q, basis), r) * zeta);
}

inline double inner_r_emb(const ModelManifold& m, double r, const TangentFieldSamples& xi,
                          const TangentFieldSamples& zeta, int modes) {
  const FourierBasis basis(m.dim(), modes);
  return inner_r_emb(m, xi.loop, basis, r, field_coefficients(xi, basis),
                     field_coefficients(zeta, basis));
}

/// Ambient-coordinate variant: (1 − d²/dt²)^r is applied to each ambient
/// component of ι_*ζ in its own Fourier modes, then paired with ι_*ξ in L².
/// The ambient curves are sampled at `nodes` points and must be resolved
/// there.
inline double inner_r_emb_ambient(const ModelManifold& m, const LoopPath& q,
                                  const FourierBasis& basis, double r, const Eigen::VectorXd& xi,
                                  const Eigen::VectorXd& zeta, int nodes = 0) {
  if (nodes <= 0) nodes = 8 * std::max({basis.modes(), q.modes(), 8}) + 1;
  const TangentFieldSamples fx = field_from_coefficients(q, basis, xi, nodes);
  const TangentFieldSamples fz = field_from_coefficients(q, basis, zeta, nodes);
  const Eigen::MatrixXd ax = embed_field(m, fx);
  const Eigen::MatrixXd az = embed_field(m, fz);
  const int kmax = (nodes - 1) / 2;
  const FourierBasis amb(static_cast<int>(az.cols()), kmax);
  Eigen::VectorXd cz = amb.analyze(az);
  const Eigen::VectorXd cx = amb.analyze(ax);
  for (int idx = 0; idx < amb.size(); ++idx)
    cz(idx) *= std::pow(1.0 + amb.laplacian_eigenvalue(idx), r);
  return cx.dot(cz);
}

/// Sup norm of an eigenfield |ξ(t)| on a fine grid.
inline double sup_norm(const FourierBasis& basis, const Eigen::VectorXd& coeffs, int nodes = 0) {
  if (nodes <= 0) nodes = 16 * basis.modes() + 17;
  return basis.sample(coeffs, nodes).rowwise().norm().maxCoeff();
}

struct GrowthConstants {
  double c = 0.0;
  double C = 0.0;
  double d = 0.0;
};

/// Per-loop fit of c(j² − d) ≤ λ_j ≤ C(j² + d) with d = n²(1 + ‖q̇‖_∞).
/// For j² ≤ d the lower bound is nonpositive and holds trivially.
inline GrowthConstants fit_growth_constants(const ModelManifold& m, const LoopPath& q,
                                            const SpectralFrame& f) {
  double vmax = 0.0;
  const int nodes = quadrature_nodes(std::max(q.modes(), 8));
  for (int i = 0; i < nodes; ++i)
    vmax = std::max(vmax, loop_velocity(m, q, static_cast<double>(i) / nodes).norm());
  GrowthConstants g;
  g.d = m.dim() * m.dim() * (1.0 + vmax);
  g.c = std::numeric_limits<double>::infinity();
  for (int j = 0; j < f.size(); ++j) {
    const double j2 = static_cast<double>(j) * j;
    g.C = std::max(g.C, f.eigenvalues(j) / (j2 + g.d));
    if (j2 > g.d) g.c = std::min(g.c, f.eigenvalues(j) / (j2 - g.d));
  }
  if (!std::isfinite(g.c)) g.c = 1.0;
  return g;
}

}  // namespace loopspace
