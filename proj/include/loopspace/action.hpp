#pragma once

#include "fourier.hpp"
#include "hamiltonian.hpp"
#include "loop.hpp"
#include "manifold.hpp"
#include "spectral.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <vector>
#include <stdexcept>
#include <string>

namespace loopspace {

/// A point (q, p) of the mixed-regularity bundle: q ∈ H^s, p ∈ H^{1−s}(q*TM),
/// with p expanded in the spectral frame of q.
struct PhasePoint {
  LoopPath loop;
  FiberField p;
  double s = 0.75;

  const SpectralFrame& frame() const { return *p.frame; }
  const FourierBasis& basis() const { return p.frame->basis; }
  int modes() const { return basis().modes(); }
};

inline PhasePoint make_phase_point(const ModelManifold& m, const LoopPath& q,
                                   const Eigen::VectorXd& p_fourier, double s, int modes,
                                   FrameCache* cache = nullptr,
                                   FrameMethod method = FrameMethod::Auto) {
  if (!(s > 0.5 && s < 1.0)) throw std::invalid_argument("PhasePoint: s must lie in (1/2, 1)");
  FramePtr f = cache ? cache->get(m, q, modes, method) : make_frame(m, q, modes, method);
  if (p_fourier.size() != f->size()) throw std::invalid_argument("PhasePoint: fiber size mismatch");
  return {q, FiberField::from_fourier(std::move(f), p_fourier), s};
}

/// x + (h, k): the loop is moved by exp_q(h) and the fiber by k. Transport
/// along the flat models is the identity on Fourier coefficients.
inline PhasePoint moved(const ModelManifold& m, const PhasePoint& x, const Eigen::VectorXd& h,
                        const Eigen::VectorXd& k, FrameCache* cache = nullptr) {
  const LoopPath q = displaced(m, x.loop, x.basis(), h);
  return make_phase_point(m, q, x.p.fourier() + k, x.s, x.modes(), cache, x.frame().method);
}

/// Fiber samples p(t_i) at the action quadrature nodes.
inline Eigen::MatrixXd fiber_samples(const PhasePoint& x) {
  return x.basis().sample(x.p.fourier(), quadrature_nodes(x.modes()));
}

/// 𝔸(q,p) = ⟨q̇, p⟩ − ∫ H(q, p) dt.
inline double action(const ModelManifold& m, const PhasePoint& x, const HamiltonianSpec& spec) {
  const Eigen::VectorXd pf = x.p.fourier();
  const double kinetic = velocity_coefficients(m, x.loop, x.basis()).dot(pf);
  const int nodes = quadrature_nodes(x.modes());
  const Eigen::MatrixXd ps = x.basis().sample(pf, nodes);
  double hsum = 0.0;
  for (int i = 0; i < nodes; ++i) {
    const Eigen::VectorXd pi = ps.row(i).transpose();
    const double t = static_cast<double>(i) / nodes;
    hsum += spec.evaluate(evaluate_loop(m, x.loop, t), pi);
  }
  if (!std::isfinite(hsum)) throw std::runtime_error("action: quadrature produced a non-finite value");
  return kinetic - hsum / nodes;
}

/// P_J ∂_p H(p) in Fourier coordinates.
inline Eigen::VectorXd projected_dp(const PhasePoint& x, const HamiltonianSpec& spec) {
  Eigen::MatrixXd ps = fiber_samples(x);
  for (Eigen::Index i = 0; i < ps.rows(); ++i) ps.row(i) = spec.dp(ps.row(i).transpose()).transpose();
  return x.basis().analyze(ps);
}

/// Pair of a horizontal and a vertical component.
struct TangentPair {
  Eigen::VectorXd horizontal;
  Eigen::VectorXd vertical;
};

/// L² differential of 𝔸 in Fourier coordinates: d𝔸(h,k) = ⟨dq, h⟩ + ⟨dp, k⟩.
/// dq = ∇*p − ∂_q H = −ṗ on the flat models, dp = q̇ − ∂_p H.
inline TangentPair action_differential(const ModelManifold& m, const PhasePoint& x,
                                       const HamiltonianSpec& spec) {
  const Eigen::VectorXd pf = x.p.fourier();
  return {-x.basis().derivative(pf), velocity_coefficients(m, x.loop, x.basis()) - projected_dp(x, spec)};
}

/// Gradient for the metric ⟨·ʰ,·ʰ⟩_s + ⟨·ᵛ,·ᵛ⟩_{1−s}, in frame coordinates:
/// (ȷ*_s dq, ȷ*_{1−s} dp).
inline TangentPair gradient(const ModelManifold& m, const PhasePoint& x,
                            const HamiltonianSpec& spec) {
  const TangentPair d = action_differential(m, x, spec);
  const SpectralFrame& f = x.frame();
  return {sobolev_weights(f, -x.s).cwiseProduct(f.to_frame(d.horizontal)),
          sobolev_weights(f, x.s - 1.0).cwiseProduct(f.to_frame(d.vertical))};
}

inline double gradient_norm(const PhasePoint& x, const TangentPair& g) {
  const double h = norm_r(x.frame(), x.s, g.horizontal);
  const double v = norm_r(x.frame(), 1.0 - x.s, g.vertical);
  return std::sqrt(h * h + v * v);
}

inline double gradient_norm(const ModelManifold& m, const PhasePoint& x,
                            const HamiltonianSpec& spec) {
  return gradient_norm(x, gradient(m, x, spec));
}

/// Metric pairing ⟨g, (h, k)⟩ for a direction given in Fourier coordinates.
inline double metric_pairing(const PhasePoint& x, const TangentPair& g, const Eigen::VectorXd& h,
                             const Eigen::VectorXd& k) {
  const SpectralFrame& f = x.frame();
  return (sobolev_weights(f, x.s).array() * g.horizontal.array() * f.to_frame(h).array()).sum() +
         (sobolev_weights(f, 1.0 - x.s).array() * g.vertical.array() * f.to_frame(k).array()).sum();
}

/// ∇²Q for Q(p) = ∫ H(p), in L² Fourier coordinates.
inline Eigen::MatrixXd fiber_hessian(const FourierBasis& b, const Eigen::VectorXd& p_fourier,
                                     const HamiltonianSpec& spec) {
  const int d = b.size();
  const int n = b.dim();
  const int nodes = quadrature_nodes(b.modes());
  const auto bm = sampling_matrix(b.modes(), nodes);
  const Eigen::MatrixXd ps = b.sample(p_fourier, nodes);
  std::vector<Eigen::MatrixXd> hp(nodes);
  for (int i = 0; i < nodes; ++i) hp[i] = spec.dpp(ps.row(i).transpose());
  Eigen::MatrixXd q2 = Eigen::MatrixXd::Zero(d, d);
  const int sm = b.scalar_size();
  Eigen::VectorXd w(nodes);
  for (int c = 0; c < n; ++c)
    for (int e = c; e < n; ++e) {
      for (int i = 0; i < nodes; ++i) w(i) = hp[i](c, e);
      if (w.isZero(0.0)) continue;
      const Eigen::MatrixXd blk = bm->transpose() * w.asDiagonal() * (*bm) / static_cast<double>(nodes);
      for (int a = 0; a < sm; ++a)
        for (int k = 0; k < sm; ++k) {
          q2(a * n + c, k * n + e) = blk(a, k);
          q2(a * n + e, k * n + c) = blk(a, k);
        }
    }
  return q2;
}

/// L² Hessian of 𝔸 in Fourier coordinates, ordered (h, k):
///   [[0, Dᵀ], [D, −∇²Q]].
inline Eigen::MatrixXd action_hessian(const PhasePoint& x, const HamiltonianSpec& spec) {
  const FourierBasis& b = x.basis();
  const int d = b.size();
  const Eigen::MatrixXd dm = b.derivative_matrix();
  Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(2 * d, 2 * d);
  hess.topRightCorner(d, d) = dm.transpose();
  hess.bottomLeftCorner(d, d) = dm;
  hess.bottomRightCorner(d, d) = -fiber_hessian(b, x.p.fourier(), spec);
  return hess;
}

/// Sup over a fine grid of |q̇ − ∂_p H| + |∇_{q̇} p + ∂_q H|.
inline double hamilton_residual(const ModelManifold& m, const PhasePoint& x,
                                const HamiltonianSpec& spec) {
  const int nodes = 4 * quadrature_nodes(x.modes());
  const Eigen::VectorXd pf = x.p.fourier();
  const Eigen::MatrixXd ps = x.basis().sample(pf, nodes);
  const Eigen::MatrixXd dps = x.basis().sample(x.basis().derivative(pf), nodes);
  double worst = 0.0;
  for (int i = 0; i < nodes; ++i) {
    const double t = static_cast<double>(i) / nodes;
    const Eigen::VectorXd p = ps.row(i).transpose();
    const auto [qd, pd] = hamiltonian_vector_field(spec, evaluate_loop(m, x.loop, t), p);
    const double res = (loop_velocity(m, x.loop, t) - qd).norm() + (dps.row(i).transpose() - pd).norm();
    worst = std::max(worst, res);
  }
  return worst;
}

/// 𝔼(q) = ½‖q̇‖².
inline double energy(const ModelManifold& m, const PhasePoint& x) { return loop_energy(m, x.loop); }

enum class CriticalKind { Constant, ClosedGeodesic, FakeGeodesic, OnHypersurface, Unclassified };

inline const char* kind_name(CriticalKind k) {
  switch (k) {
    case CriticalKind::Constant: return "constant";
    case CriticalKind::ClosedGeodesic: return "closed-geodesic";
    case CriticalKind::FakeGeodesic: return "fake-geodesic";
    case CriticalKind::OnHypersurface: return "on-hypersurface";
    case CriticalKind::Unclassified: return "unclassified";
  }
  return "?";
}

struct Classification {
  CriticalKind kind = CriticalKind::Unclassified;
  double sigma = std::nan("");
  double pmin = 0.0;
  double pmax = 0.0;
  std::string note;
};

/// Branch of H_r containing the orbit image of a (near-)critical point.
inline Classification classify_critical(const ModelManifold& m, const PhasePoint& x,
                                        const HamiltonianSpec& spec, double tol) {
  const int nodes = 4 * quadrature_nodes(x.modes());
  const Eigen::VectorXd rho = x.basis().sample(x.p.fourier(), nodes).rowwise().norm();
  Classification c;
  c.pmin = rho.minCoeff();
  c.pmax = rho.maxCoeff();
  const Region lo = spec.region(c.pmin), hi = spec.region(c.pmax);
  const double band = 1e-9;
  auto both = [&](Region r) { return lo == r && hi == r; };
  if ((lo == Region::Bounded || lo == Region::Plateau) && (hi == Region::Bounded || hi == Region::Plateau)) {
    c.kind = CriticalKind::Constant;
  } else if (both(Region::Shell)) {
    if (c.pmax - c.pmin <= tol) {
      c.kind = CriticalKind::OnHypersurface;
      c.sigma = spec.sigma_of(0.5 * (c.pmin + c.pmax));
    } else {
      c.note = "fiber norm varies across the shell";
    }
  } else if (both(Region::Outer)) {
    if (c.pmin >= 2 * spec.rho1 - band) {
      const double gap = std::abs(action(m, x, spec) - (energy(m, x) - spec.r));
      if (gap <= tol) c.kind = CriticalKind::ClosedGeodesic;
      else c.note = "action differs from E(q) - r";
    } else if (c.pmax <= 2 * spec.rho1 + band) {
      c.kind = CriticalKind::FakeGeodesic;
    } else {
      c.note = "fiber norm straddles 2 rho1";
    }
  } else {
    c.note = std::string("image straddles ") + region_name(lo) + "/" + region_name(hi);
  }
  return c;
}

/// A periodic orbit of X_{H_r} on the flat bundle through (q0, p0) with
/// period T (p is constant along it).
struct PeriodicOrbit {
  Eigen::VectorXd q0;
  Eigen::VectorXd p0;
  double period = 1.0;
};

/// t ↦ x(Tt), a 1-periodic orbit of H_{Tr}. Returns the phase point and the
/// rescaled spec.
inline std::pair<PhasePoint, HamiltonianSpec> rescale_period(const ModelManifold& m,
                                                             const PeriodicOrbit& orbit,
                                                             const HamiltonianSpec& spec,
                                                             int modes, double s) {
  if (!(orbit.period > 0.0)) throw std::invalid_argument("rescale_period: period must be positive");
  const double rho = orbit.p0.norm();
  const Region reg = spec.region(rho);
  if (reg == Region::Outer)
    throw std::invalid_argument("rescale_period: orbit is not contained in the thickening");
  const Eigen::VectorXd v = orbit.period * spec.dp(orbit.p0);
  LoopPath q = straight_loop(m, Eigen::VectorXi::Zero(m.dim()), 0);
  q.base = orbit.q0;
  for (int c = 0; c < m.dim(); ++c) {
    const double w = v(c) / m.period(c);
    const double wr = std::round(w);
    if (std::abs(w - wr) > 1e-9) throw std::invalid_argument("rescale_period: orbit does not close");
    q.winding(c) = static_cast<int>(wr);
  }
  const FourierBasis basis(m.dim(), modes);
  return {make_phase_point(m, q, basis.constant(orbit.p0), s, modes),
          spec.with_r(spec.r * orbit.period)};
}

/// RK4 integration of X_H from (q0, p0); returns the final state.
inline std::pair<Eigen::VectorXd, Eigen::VectorXd> integrate_hamiltonian(
    const HamiltonianSpec& spec, Eigen::VectorXd q, Eigen::VectorXd p, double T, int steps) {
  const double dt = T / steps;
  for (int i = 0; i < steps; ++i) {
    const auto [a1, b1] = hamiltonian_vector_field(spec, q, p);
    const auto [a2, b2] = hamiltonian_vector_field(spec, q + 0.5 * dt * a1, p + 0.5 * dt * b1);
    const auto [a3, b3] = hamiltonian_vector_field(spec, q + 0.5 * dt * a2, p + 0.5 * dt * b2);
    const auto [a4, b4] = hamiltonian_vector_field(spec, q + dt * a3, p + dt * b3);
    q += dt / 6.0 * (a1 + 2 * a2 + 2 * a3 + a4);
    p += dt / 6.0 * (b1 + 2 * b2 + 2 * b3 + b4);
  }
  return {q, p};
}

}  // namespace loopspace
