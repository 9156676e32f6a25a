#pragma once

#include "action.hpp"
#include "hamiltonian.hpp"
#include "spectral.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace loopspace {

struct FlowConfig {
  double s = 0.75;
  int J = 32;
  double gamma = 2.0;
  double gamma_prime = 0.0;   // derived when ≤ 0
  double gamma_dprime = 0.0;  // derived when ≤ 0
  double epsilon = 0.5;
  double t0 = 2.0;
  double dt = 1e-2;
  double grad_tol = 1e-6;
  double t_max = 50.0;
  int accept_steps = 10;
  int max_halvings = 30;
  double stationary_floor = 1e-10;  // V_r is taken as zero below this gradient norm

  /// γ′ = γ + α/ε² + 1 and γ″ = γ′ + 2 unless set explicitly.
  FlowConfig derived(double alpha) const {
    FlowConfig c = *this;
    if (c.gamma_prime <= 0.0) c.gamma_prime = c.gamma + alpha / (c.epsilon * c.epsilon) + 1.0;
    if (c.gamma_dprime <= 0.0) c.gamma_dprime = c.gamma_prime + 2.0;
    c.validate();
    return c;
  }

  void validate() const {
    auto fail = [](const std::string& m) { throw std::invalid_argument("FlowConfig: " + m); };
    if (!(s > 0.5 && s < 1.0)) fail("need 1/2 < s < 1");
    if (J < 1) fail("need J >= 1");
    if (!(gamma > 0.0 && gamma < gamma_prime && gamma_prime < gamma_dprime)) fail("need 0 < gamma < gamma' < gamma''");
    if (!(gamma_dprime > gamma_prime + 1.0)) fail("need gamma'' > gamma' + 1");
    if (!(epsilon > 0.0)) fail("need epsilon > 0");
    if (!(dt > 0.0) || !(t_max > 0.0) || !(t0 > 0.0)) fail("need positive dt, t0, t_max");
    if (!(grad_tol > 0.0)) fail("need grad_tol > 0");
  }

  /// φ(‖p‖_{1−s}): 1 on [0, γ′+1], 0 on [γ″, ∞).
  double cutoff(double pnorm) const {
    const double lo = gamma_prime + 1.0;
    return 1.0 - Smoothstep::value((pnorm - lo) / (gamma_dprime - lo));
  }
};

/// One evaluation of V_r with its diagnostics.
struct FlowField {
  Eigen::VectorXd dq;  // Fourier coordinates
  Eigen::VectorXd dp;
  double grad_norm = 0.0;
  double phi_tilde = 0.0;  // φ/√(1+‖grad‖²)
};

/// V_r = −φ(‖p‖_{1−s}) grad 𝔸_r / √(1 + ‖grad 𝔸_r‖²).
inline FlowField flow_field(const ModelManifold& m, const PhasePoint& x,
                            const HamiltonianSpec& spec, const FlowConfig& cfg) {
  const TangentPair g = gradient(m, x, spec);
  FlowField v;
  v.grad_norm = gradient_norm(x, g);
  const double cut = cfg.cutoff(norm_r(1.0 - x.s, x.p));
  v.phi_tilde = cut / std::sqrt(1.0 + v.grad_norm * v.grad_norm);
  const SpectralFrame& f = x.frame();
  const double scale = v.grad_norm <= cfg.stationary_floor ? 0.0 : v.phi_tilde;
  v.dq = -scale * f.to_fourier(g.horizontal);
  v.dp = -scale * f.to_fourier(g.vertical);
  return v;
}

struct StepResult {
  PhasePoint x;
  double dt = 0.0;          // step actually taken
  double phi_integral = 0;  // ∫ φ̃ over the step
  int halvings = 0;
};

/// One RK4 step of V_r, halving dt while the action rises by more than 1e−8.
inline StepResult flow_step(const ModelManifold& m, const PhasePoint& x,
                            const HamiltonianSpec& spec, const FlowConfig& cfg,
                            double dt = 0.0) {
  if (dt <= 0.0) dt = cfg.dt;
  const double a0 = action(m, x, spec);
  const FlowField k1 = flow_field(m, x, spec, cfg);
  for (int halvings = 0;; ++halvings) {
    const FlowField k2 = flow_field(m, moved(m, x, 0.5 * dt * k1.dq, 0.5 * dt * k1.dp), spec, cfg);
    const FlowField k3 = flow_field(m, moved(m, x, 0.5 * dt * k2.dq, 0.5 * dt * k2.dp), spec, cfg);
    const FlowField k4 = flow_field(m, moved(m, x, dt * k3.dq, dt * k3.dp), spec, cfg);
    const Eigen::VectorXd dq = dt / 6.0 * (k1.dq + 2.0 * k2.dq + 2.0 * k3.dq + k4.dq);
    const Eigen::VectorXd dp = dt / 6.0 * (k1.dp + 2.0 * k2.dp + 2.0 * k3.dp + k4.dp);
    PhasePoint next = moved(m, x, dq, dp);
    if (action(m, next, spec) <= a0 + 1e-8 || halvings >= cfg.max_halvings) {
      const double integral =
          dt / 6.0 * (k1.phi_tilde + 2.0 * k2.phi_tilde + 2.0 * k3.phi_tilde + k4.phi_tilde);
      return {std::move(next), dt, integral, halvings};
    }
    dt *= 0.5;
  }
}

struct FlowTrajectory {
  std::vector<double> times;
  std::vector<PhasePoint> states;
  std::vector<double> actions;
  std::vector<double> grad_norms;
  std::vector<double> phi_integrals;  // ∫₀ᵗ φ̃
  std::vector<std::pair<double, double>> ab;
  bool converged = false;
  bool budget_exhausted = false;
  int halvings = 0;

  std::size_t size() const { return states.size(); }
};

struct FlowOptions {
  bool stop_at_critical = false;
  int record_every = 1;
};

/// a = ½(e^{−I} − e^{I}), b = ½(e^{−I} + e^{I}).
inline std::pair<double, double> representation_ab(double integral) {
  const double em = std::exp(-integral), ep = std::exp(integral);
  return {0.5 * (em - ep), 0.5 * (em + ep)};
}

inline FlowTrajectory flow(const ModelManifold& m, const PhasePoint& x0,
                           const HamiltonianSpec& spec, const FlowConfig& cfg, double horizon,
                           FlowOptions opt = {}) {
  if (horizon > cfg.t_max) throw std::invalid_argument("flow: horizon exceeds t_max");
  FlowTrajectory tr;
  auto record = [&](const PhasePoint& x, double t, double integral, double gnorm) {
    tr.times.push_back(t);
    tr.states.push_back(x);
    tr.actions.push_back(action(m, x, spec));
    tr.grad_norms.push_back(gnorm);
    tr.phi_integrals.push_back(integral);
    tr.ab.push_back(representation_ab(integral));
  };
  PhasePoint x = x0;
  double t = 0.0, integral = 0.0;
  double gnorm = gradient_norm(m, x, spec);
  record(x, t, integral, gnorm);
  int below = gnorm < cfg.grad_tol ? 1 : 0;
  int step = 0;
  const long max_steps = static_cast<long>(std::ceil(horizon / cfg.dt)) * 64 + 16;
  while (t < horizon - 1e-12) {
    if (step >= max_steps) {
      tr.budget_exhausted = true;
      break;
    }
    StepResult st = flow_step(m, x, spec, cfg, std::min(cfg.dt, horizon - t));
    x = std::move(st.x);
    t += st.dt;
    integral += st.phi_integral;
    tr.halvings += st.halvings;
    gnorm = gradient_norm(m, x, spec);
    below = gnorm < cfg.grad_tol ? below + 1 : 0;
    ++step;
    const bool done = opt.stop_at_critical && below >= cfg.accept_steps;
    if (step % std::max(1, opt.record_every) == 0 || done || t >= horizon - 1e-12)
      record(x, t, integral, gnorm);
    if (below >= cfg.accept_steps) tr.converged = true;
    if (done) break;
  }
  return tr;
}

struct CriticalSearchResult {
  PhasePoint x;
  bool converged = false;
  int iterations = 0;
  double grad_norm = 0.0;
  double action = 0.0;
};

/// Damped Newton iteration on grad 𝔸_r = 0 using the analytic Hessian; the
/// minimum-norm solve absorbs the translation null space. Converged once the
/// gradient norm stays below tol for `accept` consecutive iterates.
inline CriticalSearchResult critical_point_search(const ModelManifold& m, const PhasePoint& x0,
                                                  const HamiltonianSpec& spec, double tol,
                                                  int max_iter = 200, int accept = 10) {
  CriticalSearchResult res{x0};
  PhasePoint x = x0;
  double gn = gradient_norm(m, x, spec);
  int below = gn < tol ? 1 : 0;
  const int d = x.basis().size();
  for (int it = 0; it < max_iter && below < accept; ++it) {
    const TangentPair dl = action_differential(m, x, spec);
    Eigen::VectorXd rhs(2 * d);
    rhs << -dl.horizontal, -dl.vertical;
    const Eigen::MatrixXd hess = action_hessian(x, spec);
    const Eigen::VectorXd z = hess.completeOrthogonalDecomposition().solve(rhs);
    double step = 1.0;
    PhasePoint best = moved(m, x, z.head(d), z.tail(d));
    double best_gn = gradient_norm(m, best, spec);
    while (best_gn > (1.0 - 1e-4 * step) * gn && step > 1e-6 && gn > 1e-14) {
      step *= 0.5;
      PhasePoint trial = moved(m, x, step * z.head(d), step * z.tail(d));
      const double tg = gradient_norm(m, trial, spec);
      if (tg < best_gn) best = std::move(trial), best_gn = tg;
      else if (best_gn <= (1.0 - 1e-4 * step) * gn) break;
    }
    res.iterations = it + 1;
    if (best_gn < gn) {
      x = std::move(best);
      gn = best_gn;
    } else if (gn >= tol) {
      break;  // stagnated
    }
    below = gn < tol ? below + 1 : 0;
  }
  res.converged = below >= accept;
  res.grad_norm = gn;
  res.action = action(m, x, spec);
  res.x = std::move(x);
  return res;
}

struct RepresentationSample {
  double t = 0.0;
  double a = 0.0;
  double b = 1.0;
  double k_residual = 0.0;
};

/// K(t) = p_t − a·ȷ*_{1−s}q̇₀ − b·p₀, measured in the (1−s)-norm of the
/// initial frame; transport is the identity on the flat models.
inline std::vector<RepresentationSample> representation_coefficients(const ModelManifold& m,
                                                                     const FlowTrajectory& tr) {
  std::vector<RepresentationSample> out;
  if (tr.states.empty()) return out;
  const PhasePoint& x0 = tr.states.front();
  const SpectralFrame& f0 = x0.frame();
  const FiberField qdot = FiberField::from_fourier(x0.p.frame, velocity_coefficients(m, x0.loop, x0.basis()));
  const Eigen::VectorXd jq = adjoint_inclusion(x0.s, qdot).coeffs;
  for (std::size_t i = 0; i < tr.size(); ++i) {
    const auto [a, b] = tr.ab[i];
    const Eigen::VectorXd pt = f0.to_frame(tr.states[i].p.fourier());
    const Eigen::VectorXd k = pt - a * jq - b * x0.p.coeffs;
    out.push_back({tr.times[i], a, b, norm_r(f0, 1.0 - x0.s, k)});
  }
  return out;
}

struct PsRow {
  double step1 = 0.0;  // ‖ȷ*_{1−s}(q̇ − p)‖_{1−s}
  double step2 = 0.0;  // ‖p‖²/(1 + ‖p‖_{1−s})
  double step3 = 0.0;  // ‖∇_{q̇} p‖_{−s}
  double parallel = 0.0;  // ‖p^par‖
  double transverse = 0.0;  // ‖p̃‖_{1−s}
};

struct PsReport {
  std::vector<PsRow> rows;
  bool diverging = false;
  std::string flagged;
};

inline PsRow ps_row(const ModelManifold& m, const PhasePoint& x) {
  const SpectralFrame& f = x.frame();
  const Eigen::VectorXd qd = f.to_frame(velocity_coefficients(m, x.loop, x.basis()));
  PsRow r;
  const Eigen::VectorXd diff = qd - x.p.coeffs;
  r.step1 = norm_r(f, x.s - 1.0, diff);
  const double l2 = x.p.coeffs.norm();
  r.step2 = l2 * l2 / (1.0 + norm_r(1.0 - x.s, x.p));
  r.step3 = norm_r(f, -x.s, f.derivative(x.p.coeffs));
  Eigen::VectorXd par = Eigen::VectorXd::Zero(f.size()), tilde = x.p.coeffs;
  for (int j = 0; j < f.size(); ++j)
    if (f.eigenvalues(j) == 0.0) par(j) = x.p.coeffs(j), tilde(j) = 0.0;
  r.parallel = par.norm();
  r.transverse = norm_r(f, 1.0 - x.s, tilde);
  return r;
}

/// A series diverges when its last value exceeds 10(1 + first) and it grows
/// monotonically over the second half.
inline bool series_diverges(const std::vector<double>& v) {
  if (v.size() < 4) return false;
  if (!(v.back() > 10.0 * (1.0 + std::abs(v.front())))) return false;
  for (std::size_t i = v.size() / 2 + 1; i < v.size(); ++i)
    if (v[i] < v[i - 1]) return false;
  return true;
}

inline PsReport ps_diagnostics(const ModelManifold& m, const std::vector<PhasePoint>& states) {
  PsReport rep;
  for (const auto& x : states) rep.rows.push_back(ps_row(m, x));
  const char* names[] = {"step1", "step2", "step3", "parallel", "transverse"};
  for (int q = 0; q < 5; ++q) {
    std::vector<double> v;
    for (const auto& r : rep.rows) {
      const double vals[] = {r.step1, r.step2, r.step3, r.parallel, r.transverse};
      v.push_back(vals[q]);
    }
    if (series_diverges(v)) {
      rep.diverging = true;
      if (!rep.flagged.empty()) rep.flagged += ",";
      rep.flagged += names[q];
    }
  }
  return rep;
}

inline PsReport ps_diagnostics(const ModelManifold& m, const FlowTrajectory& tr) {
  return ps_diagnostics(m, tr.states);
}

}  // namespace loopspace
