#pragma once

#include "action.hpp"
#include "flow.hpp"
#include "hamiltonian.hpp"
#include "spectral.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

namespace loopspace {

struct AscentResult {
  Eigen::VectorXd p;  // Fourier coordinates
  double value = -std::numeric_limits<double>::infinity();
  bool converged = false;
  int iterations = 0;
};

/// Maximize p ↦ 𝔸_r(q, p) over {‖p‖_{1−s} ≤ radius} by Levenberg–Marquardt
/// steps on the concave model −∇²Q.
inline AscentResult fiber_ascent(const FourierBasis& basis, const Eigen::VectorXd& qdot,
                                 const HamiltonianSpec& spec, const SpectralFrame& frame, double s,
                                 double radius, Eigen::VectorXd p, int max_iter = 300) {
  const int nodes = quadrature_nodes(basis.modes());
  auto value = [&](const Eigen::VectorXd& pp) {
    const Eigen::VectorXd rho = basis.sample(pp, nodes).rowwise().norm();
    double h = 0.0;
    for (int i = 0; i < nodes; ++i) h += spec.h(rho(i));
    return qdot.dot(pp) - h / nodes;
  };
  auto grad = [&](const Eigen::VectorXd& pp) {
    Eigen::MatrixXd ps = basis.sample(pp, nodes);
    for (int i = 0; i < nodes; ++i) ps.row(i) = spec.dp(ps.row(i).transpose()).transpose();
    return Eigen::VectorXd(qdot - basis.analyze(ps));
  };
  auto project = [&](Eigen::VectorXd pp) {
    const double nr = norm_r(frame, 1.0 - s, frame.to_frame(pp));
    if (nr > radius) pp *= radius / nr;
    return pp;
  };
  p = project(std::move(p));
  AscentResult res;
  double f = value(p);
  double mu = 1e-3;
  const int d = basis.size();
  Eigen::VectorXd g = grad(p);
  for (int it = 0; it < max_iter; ++it) {
    res.iterations = it + 1;
    if (g.norm() < 1e-12) break;
    const Eigen::MatrixXd hq = fiber_hessian(basis, p, spec);
    bool improved = false;
    while (mu < 1e12) {
      Eigen::LDLT<Eigen::MatrixXd> ldlt(hq + mu * Eigen::MatrixXd::Identity(d, d));
      if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
        const Eigen::VectorXd trial = project(p + ldlt.solve(g));
        const double ft = value(trial);
        // near a maximum the value stalls at rounding level; accept on gradient decrease
        const Eigen::VectorXd gt = grad(trial);
        if (ft > f || (ft >= f - 1e-14 * std::max(1.0, std::abs(f)) && gt.norm() < g.norm())) {
          p = trial;
          f = ft;
          g = gt;
          mu = std::max(mu / 3.0, 1e-12);
          improved = true;
          break;
        }
      }
      mu *= 4.0;
    }
    if (!improved) break;
  }
  res.converged = g.norm() < 1e-10;
  res.p = std::move(p);
  res.value = f;
  return res;
}

struct MinimaxRecord {
  double r = 0.0;
  double theta = 0.0;
  double alpha = 0.0;
  std::optional<PhasePoint> witness;
  Classification classification;
  double action = 0.0;
  double leaf_action = std::nan("");
  double grad_norm = 0.0;
  double residual = 0.0;
  int steps = 0;
  int starts = 0;
  bool confident = true;
  bool zero_section_ok = true;
};

struct MinimaxOptions {
  int random_starts = 2;
  int widen_starts = 8;
  std::uint64_t seed = 1;
  int record_every = 10;
  bool polish = true;
};

inline std::vector<Eigen::VectorXd> ascent_starts(const FourierBasis& basis, const SpectralFrame& frame,
                                                  const Eigen::VectorXd& qdot, double s, int randoms,
                                                  std::mt19937_64& rng) {
  std::vector<Eigen::VectorXd> starts;
  Eigen::VectorXd smooth = frame.to_fourier(
      sobolev_weights(frame, s - 1.0).cwiseProduct(frame.to_frame(qdot)));
  const double sn = smooth.norm();
  const double qn = qdot.norm();
  if (sn > 0.0)
    for (double k : {0.15, 0.3, 0.45, 0.6, 0.8, 1.0}) starts.push_back(smooth * (k * qn / sn));
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int i = 0; i < randoms; ++i) {
    Eigen::VectorXd p(basis.size());
    for (int j = 0; j < basis.size(); ++j) p(j) = gauss(rng) / (1.0 + basis.mode_of(j));
    p *= (0.25 + 0.75 * std::uniform_real_distribution<double>(0.0, 1.0)(rng)) / p.norm();
    starts.push_back(std::move(p));
  }
  return starts;
}

/// θ(r) = inf_t sup 𝔸_r over φ^t_r(π⁻¹(C)), estimated on the truncated fiber.
inline MinimaxRecord minimax_theta(const ModelManifold& m, const std::vector<LoopPath>& family,
                                   const HamiltonianSpec& spec, const FlowConfig& cfg_in,
                                   MinimaxOptions opt = {}) {
  if (family.empty()) throw std::invalid_argument("minimax_theta: empty loop family");
  for (const auto& q : family) {
    bool contractible = true;
    for (int c = 0; c < q.dim(); ++c) contractible = contractible && q.winding(c) == 0;
    if (contractible) throw std::invalid_argument("minimax_theta: loops in C must be non-contractible");
  }
  MinimaxRecord rec;
  rec.r = spec.r;
  double c = 0.0;
  for (const auto& q : family) c = std::max(c, std::sqrt(2.0 * loop_energy(m, q)));
  rec.alpha = fiber_action_bound(spec, c);
  const FlowConfig cfg = cfg_in.derived(rec.alpha);

  std::seed_seq seq{static_cast<std::uint64_t>(opt.seed), static_cast<std::uint64_t>(std::llround(spec.r * 1e9))};
  std::mt19937_64 rng(seq);

  std::vector<PhasePoint> members;
  for (const auto& q : family) {
    const PhasePoint base = make_phase_point(m, q, Eigen::VectorXd::Zero(FourierBasis(m.dim(), cfg.J).size()),
                                             cfg.s, cfg.J);
    const FourierBasis& b = base.basis();
    const Eigen::VectorXd qdot = velocity_coefficients(m, q, b);
    auto run = [&](const std::vector<Eigen::VectorXd>& starts) {
      bool all = true;
      for (const auto& p0 : starts) {
        AscentResult a = fiber_ascent(b, qdot, spec, base.frame(), cfg.s, cfg.gamma_dprime, p0);
        all = all && a.converged;
        rec.steps += a.iterations;
        ++rec.starts;
        members.push_back(make_phase_point(m, q, a.p, cfg.s, cfg.J));
      }
      return all;
    };
    if (!run(ascent_starts(b, base.frame(), qdot, cfg.s, opt.random_starts, rng)))
      rec.confident = run(ascent_starts(b, base.frame(), qdot, cfg.s, opt.widen_starts, rng));
  }

  // Flow the family for t0 and track the running sup; θ is its infimum over t.
  std::vector<FlowTrajectory> flows;
  for (const auto& x : members) {
    flows.push_back(flow(m, x, spec, cfg, cfg.t0, {false, opt.record_every}));
    rec.steps += static_cast<int>(flows.back().size());
  }
  std::size_t frames = flows.front().size();
  for (const auto& f : flows) frames = std::min(frames, f.size());
  double theta = std::numeric_limits<double>::infinity();
  std::size_t best_member = 0;
  for (std::size_t k = 0; k < frames; ++k) {
    double sup = -std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t i = 0; i < flows.size(); ++i)
      if (flows[i].actions[k] > sup) sup = flows[i].actions[k], arg = i;
    if (sup < theta) theta = sup, best_member = arg;
  }
  rec.theta = theta;
  rec.zero_section_ok = theta >= -1e-6;

  PhasePoint w = flows[best_member].states.back();
  if (opt.polish) {
    CriticalSearchResult cs = critical_point_search(m, w, spec, 1e-3 * cfg.grad_tol, 100, cfg.accept_steps);
    rec.steps += cs.iterations;
    w = cs.x;
  }
  rec.grad_norm = gradient_norm(m, w, spec);
  rec.action = action(m, w, spec);
  rec.residual = hamilton_residual(m, w, spec);
  rec.classification = classify_critical(m, w, spec, 1e-6);
  if (rec.classification.kind == CriticalKind::OnHypersurface)
    rec.leaf_action = velocity_coefficients(m, w.loop, w.basis()).dot(w.p.fourier());
  rec.witness = std::move(w);
  return rec;
}

struct SweepResult {
  std::vector<MinimaxRecord> records;
  std::vector<std::string> errors;  // per grid point, empty when ok
  double r0 = 0.0;
  double alpha = 0.0;
  double leaf_bound = 0.0;          // 2(α + r₀)
  int first_hit = -1;               // first on-hypersurface record
  int first_hit_after_r0 = -1;
  double plateau_spread = std::nan("");  // spread of 𝔸 + r over closed-geodesic records
};

/// Runs `task(i)` for i in [0, count) on `jobs` workers.
template <typename Task>
void parallel_for(int count, int jobs, Task&& task) {
  jobs = std::max(1, std::min(jobs, count));
  if (jobs == 1) {
    for (int i = 0; i < count; ++i) task(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  for (int j = 0; j < jobs; ++j)
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) task(i);
    });
  for (auto& t : pool) t.join();
}

inline SweepResult orbit_sweep(const ModelManifold& m, const std::vector<LoopPath>& family,
                               const HamiltonianSpec& spec, const std::vector<double>& rgrid,
                               const FlowConfig& cfg, int jobs = 1, MinimaxOptions opt = {}) {
  for (double r : rgrid)
    if (!(r > 0.0)) throw std::invalid_argument("orbit_sweep: r-grid must be positive");
  SweepResult out;
  out.r0 = r0_threshold(spec);
  double c = 0.0;
  for (const auto& q : family) c = std::max(c, std::sqrt(2.0 * loop_energy(m, q)));
  out.alpha = fiber_action_bound(spec, c);
  out.leaf_bound = 2.0 * (out.alpha + out.r0);
  const int count = static_cast<int>(rgrid.size());
  out.records.resize(count);
  out.errors.resize(count);
  parallel_for(count, jobs, [&](int i) {
    try {
      out.records[i] = minimax_theta(m, family, spec.with_r(rgrid[i]), cfg, opt);
    } catch (const std::exception& e) {
      out.records[i].r = rgrid[i];
      out.errors[i] = e.what();
    }
  });
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (int i = 0; i < count; ++i) {
    const auto& rec = out.records[i];
    if (!out.errors[i].empty()) continue;
    if (rec.classification.kind == CriticalKind::OnHypersurface) {
      if (out.first_hit < 0) out.first_hit = i;
      if (out.first_hit_after_r0 < 0 && rec.r >= out.r0) out.first_hit_after_r0 = i;
    }
    if (rec.classification.kind == CriticalKind::ClosedGeodesic) {
      lo = std::min(lo, rec.action + rec.r);
      hi = std::max(hi, rec.action + rec.r);
    }
  }
  if (hi >= lo) out.plateau_spread = hi - lo;
  return out;
}

}  // namespace loopspace
