#pragma once

#include "fourier.hpp"
#include "loop.hpp"
#include "manifold.hpp"

#include <Eigen/Dense>

#include <stdexcept>

namespace loopspace {

class AliasingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A tangent field along a loop, sampled at t_i = i/nodes. Components are
/// taken in the global coordinate frame of the model (orthonormal on the
/// models, since the metric is Euclidean in those coordinates).
struct TangentFieldSamples {
  LoopPath loop;
  Eigen::MatrixXd values;  // nodes×n

  int nodes() const { return static_cast<int>(values.rows()); }
};

inline TangentFieldSamples field_from_coefficients(const LoopPath& loop, const FourierBasis& basis,
                                                   const Eigen::VectorXd& coeffs, int nodes) {
  return {loop, basis.sample(coeffs, nodes)};
}

/// Fourier coefficients of a sampled field, rejecting content above the
/// basis cutoff.
inline Eigen::VectorXd field_coefficients(const TangentFieldSamples& f, const FourierBasis& basis,
                                          double tol = 1e-9) {
  if (f.nodes() < basis.scalar_size())
    throw AliasingError("field has fewer samples than 2J+1");
  Eigen::VectorXd c = basis.analyze(f.values);
  const Eigen::MatrixXd back = basis.sample(c, f.nodes());
  const double scale = std::max(1.0, f.values.cwiseAbs().maxCoeff());
  if ((back - f.values).cwiseAbs().maxCoeff() > tol * scale)
    throw AliasingError("field carries modes above the cutoff for this sampling");
  return c;
}

/// ∇_{q̇}ξ = ξ̇ + Γ(q̇)ξ. The field must be resolved by `modes` Fourier modes.
inline TangentFieldSamples covariant_derivative(const ModelManifold& m,
                                                const TangentFieldSamples& f, int modes) {
  f.loop.validate(m);
  const FourierBasis basis(m.dim(), modes);
  const Eigen::VectorXd c = field_coefficients(f, basis);
  TangentFieldSamples out{f.loop, basis.sample(basis.derivative(c), f.nodes())};
  for (int i = 0; i < f.nodes(); ++i) {
    const double t = static_cast<double>(i) / f.nodes();
    out.values.row(i) += m.christoffel_contraction(evaluate_loop(m, f.loop, t),
                                                   loop_velocity(m, f.loop, t),
                                                   f.values.row(i).transpose())
                             .transpose();
  }
  return out;
}

/// Pushforward of every sample through dι: nodes×N ambient vectors.
inline Eigen::MatrixXd embed_field(const ModelManifold& m, const TangentFieldSamples& f) {
  Eigen::MatrixXd out(f.nodes(), m.ambient_dim());
  for (int i = 0; i < f.nodes(); ++i) {
    const double t = static_cast<double>(i) / f.nodes();
    out.row(i) = m.push(evaluate_loop(m, f.loop, t), f.values.row(i).transpose()).transpose();
  }
  return out;
}

/// Tangential projection of the ambient derivative of ι_*ξ, computed
/// spectrally from the samples. Accurate only when the ambient curve is
/// resolved by the sampling.
inline TangentFieldSamples covariant_derivative_embedded(const ModelManifold& m,
                                                         const TangentFieldSamples& f) {
  const Eigen::MatrixXd amb = embed_field(m, f);
  Eigen::MatrixXd damb(amb.rows(), amb.cols());
  for (int k = 0; k < amb.cols(); ++k) damb.col(k) = spectral_derivative(amb.col(k));
  TangentFieldSamples out{f.loop, Eigen::MatrixXd(f.nodes(), m.dim())};
  for (int i = 0; i < f.nodes(); ++i) {
    const double t = static_cast<double>(i) / f.nodes();
    out.values.row(i) = m.pull(evaluate_loop(m, f.loop, t), damb.row(i).transpose()).transpose();
  }
  return out;
}

}  // namespace loopspace
