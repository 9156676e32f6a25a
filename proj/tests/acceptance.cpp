// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
#include <loopspace/loopspace.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <thread>
#include <vector>

using namespace loopspace;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

char buf[512];

template <typename... Args>
std::string fmt(const char* f, Args... args) {
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Eigen::VectorXd gaussian(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = g(rng);
  return v;
}

// Dense oracle for ∇*∇ on a flat model: (2πk)² on the k-th Fourier block.
Eigen::VectorXd fourier_oracle_eigenvalues(const FourierBasis& b) {
  Eigen::VectorXd e(b.size());
  for (int i = 0; i < b.size(); ++i) e(i) = std::pow(2.0 * M_PI * b.mode_of(i), 2);
  std::sort(e.data(), e.data() + e.size());
  return e;
}

const ModelManifold kTorus = ModelManifold::flat_torus(2);

HamiltonianSpec default_spec(double r = 1.0, int J = 32) {
  HamiltonianSpec s;
  s.r = r;
  s.J = J;
  return s;
}

LoopPath default_loop() { return straight_loop(kTorus, Eigen::Vector2i(1, 0)); }

Outcome circle_norms() {
  const ModelManifold circle = ModelManifold::embedded_circle();
  const FourierBasis b(1, 8);
  const Eigen::VectorXd one = b.constant(Eigen::VectorXd::Ones(1));
  double err_int = 0.0, err_emb = 0.0;
  for (int n = 1; n <= 8; ++n) {
    const LoopPath q = straight_loop(circle, Eigen::VectorXi::Constant(1, n));
    const FiberField p = FiberField::from_fourier(make_frame(circle, q, 8, FrameMethod::Dense), one);
    for (double r : {0.25, 0.5, 1.0}) {
      err_int = std::max(err_int, std::abs(norm_r(r, p) - 1.0));
      const double closed = std::pow(1.0 + 4.0 * M_PI * M_PI * n * n, r);
      err_emb = std::max(err_emb, std::abs(inner_r_emb(circle, q, b, r, one, one) - closed));
    }
  }
  return {err_int <= 1e-10 && err_emb <= 1e-8, fmt("max |intrinsic-1| = %.2e, max |embedded-closed form| = %.2e", err_int, err_emb)};
}

Outcome spectrum_bounds() {
  std::mt19937_64 rng(2024);
  bool ok = true;
  double worst_sup = 0.0, worst_eig = 0.0;
  for (int k = 0; k < 20; ++k) {
    const LoopPath q = random_loop(kTorus, rng, 4, 0.15);
    const SpectralFrame f = eigendecompose(kTorus, q, 32, FrameMethod::Dense);
    worst_eig = std::max(worst_eig, (f.eigenvalues - fourier_oracle_eigenvalues(f.basis)).cwiseAbs().maxCoeff() /
                                        f.eigenvalues.maxCoeff());
    const GrowthConstants g = fit_growth_constants(kTorus, q, f);
    ok = ok && g.c > 0.0 && std::isfinite(g.C);
    for (int j = 0; j < f.size(); ++j) {
      const double j2 = static_cast<double>(j) * j;
      const double lam = f.eigenvalues(j);
      ok = ok && g.c * (j2 - g.d) <= lam * (1 + 1e-12) + 1e-12 && lam <= g.C * (j2 + g.d) * (1 + 1e-12);
      worst_sup = std::max(worst_sup, sup_norm(f.basis, f.eigenfield(j)));
    }
  }
  ok = ok && worst_sup <= std::sqrt(2.0) + 1e-6 && worst_eig < 1e-10;
  return {ok, fmt("max sup norm = %.9f, eigenvalue rel. error vs Fourier oracle = %.1e", worst_sup, worst_eig)};
}

Outcome commutation() {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> ur(-1.0, 1.0);
  std::uniform_int_distribution<int> dim(1, 3);
  double worst = 0.0;
  for (int k = 0; k < 200; ++k) {
    const ModelManifold m = k % 5 == 0 ? ModelManifold::embedded_circle() : ModelManifold::flat_torus(dim(rng));
    const int J = 6;
    const LoopPath q = random_loop(m, rng, 2, 0.1);
    const FramePtr f = make_frame(m, q, J, k % 2 ? FrameMethod::Dense : FrameMethod::Analytic);
    const double r = ur(rng);
    const Eigen::VectorXd xi = gaussian(f->size(), rng);
    const int nodes = 4 * J + 3;
    auto nabla = [&](const Eigen::VectorXd& c) {
      const TangentFieldSamples s = field_from_coefficients(q, f->basis, c, nodes);
      return field_coefficients(covariant_derivative(m, s, J), f->basis);
    };
    auto ar = [&](const Eigen::VectorXd& c) { return fractional_apply(r, FiberField::from_fourier(f, c)).fourier(); };
    const Eigen::VectorXd lhs = ar(nabla(xi)), rhs = nabla(ar(xi));
    worst = std::max(worst, (lhs - rhs).norm() / std::max(1.0, lhs.norm()));
  }
  return {worst <= 1e-9, fmt("max ||A^r D xi - D A^r xi|| (relative) = %.2e over 200 cases", worst)};
}

Outcome negative_inequality() {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ur(0.0, 1.0);
  std::uniform_int_distribution<int> dim(1, 3);
  double worst = -1e300;
  for (int k = 0; k < 1000; ++k) {
    const ModelManifold m = k % 4 == 0 ? ModelManifold::embedded_circle() : ModelManifold::flat_torus(dim(rng));
    const LoopPath q = random_loop(m, rng, 2, 0.2);
    const FramePtr f = make_frame(m, q, 5);
    const Eigen::VectorXd v = gaussian(f->size(), rng);
    const double r = ur(rng);
    const double emb = std::sqrt(std::max(0.0, inner_r_emb(m, q, f->basis, -r, v, v)));
    const double intr = norm_r(-r, FiberField::from_fourier(f, v));
    worst = std::max(worst, emb - intr);
  }
  return {worst <= 1e-10, fmt("max (embedded - intrinsic) (-r)-norm = %.2e over 1000 cases", worst)};
}

Outcome gradient_check() {
  std::mt19937_64 rng(13);
  const HamiltonianSpec spec = default_spec(1.0);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const PhasePoint x = random_phase_point(kTorus, rng, 32, 0.75);
    const Eigen::VectorXd h = random_field(x.basis(), rng), v = random_field(x.basis(), rng);
    const double e = 1e-5;
    const double fd = (action(kTorus, moved(kTorus, x, e * h, e * v), spec) -
                       action(kTorus, moved(kTorus, x, -e * h, -e * v), spec)) / (2 * e);
    const double an = metric_pairing(x, gradient(kTorus, x, spec), h, v);
    worst = std::max(worst, std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-300}));
  }
  return {worst <= 1e-5, fmt("max relative error = %.2e over 100 points (J = 32)", worst)};
}

Outcome critical_correspondence() {
  const HamiltonianSpec spec = default_spec(1.0);
  const FourierBasis b(2, 32);
  const Eigen::Vector2d v(1.0, 0.0);
  const PhasePoint x = make_phase_point(kTorus, default_loop(), b.constant(v), 0.75, 32);
  const double g0 = gradient_norm(kTorus, x, spec);
  std::mt19937_64 rng(17);
  const Eigen::VectorXd h = random_field(b, rng), k = random_field(b, rng);
  const double scale = 0.1 / std::sqrt(h.squaredNorm() + k.squaredNorm());
  const PhasePoint start = moved(kTorus, x, scale * h, scale * k);
  FlowConfig cfg;
  cfg = cfg.derived(fiber_action_bound(spec, 1.0));
  const FlowTrajectory tr = flow(kTorus, start, spec, cfg, 0.5, {false, 10});
  const CriticalSearchResult res = critical_point_search(kTorus, tr.states.back(), spec, 1e-10);
  const double target = 0.5 * v.squaredNorm() - spec.r;
  const double gap = std::abs(res.action - target);
  return {g0 <= 1e-8 && res.converged && gap <= 1e-6,
          fmt("|grad| at orbit = %.1e, reconverged |grad| = %.1e, |A - (|v|^2/2 - r)| = %.1e", g0, res.grad_norm, gap)};
}

Outcome fake_exclusion() {
  const HamiltonianSpec base = default_spec();
  const HamiltonianSpec spec = base.with_r(r0_threshold(base));
  // dense grid, then golden-section refinement around its best node
  double best = -1e300, arg = 0.0;
  const int n = 200000;
  for (int i = 1; i <= n; ++i) {
    const double p0 = base.rho1 * (1.0 + static_cast<double>(i) / n);
    const double a = fake_geodesic_action(spec, p0);
    if (a > best) best = a, arg = p0;
  }
  double lo = std::max(base.rho1 * (1 + 1e-12), arg - base.rho1 / n);
  double hi = std::min(2 * base.rho1, arg + base.rho1 / n);
  const double gr = (std::sqrt(5.0) - 1) / 2;
  for (int it = 0; it < 100; ++it) {
    const double a = hi - gr * (hi - lo), c = lo + gr * (hi - lo);
    if (fake_geodesic_action(spec, a) > fake_geodesic_action(spec, c)) hi = c;
    else lo = a;
  }
  best = std::max(best, fake_geodesic_action(spec, 0.5 * (lo + hi)));
  return {best <= -1.0 + 1e-9, fmt("r0 = %.9f, max fake-geodesic action = %.12f", spec.r, best)};
}

Outcome representation() {
  std::mt19937_64 rng(19);
  const HamiltonianSpec spec = default_spec(1.0);
  FlowConfig cfg;
  cfg = cfg.derived(fiber_action_bound(spec, 1.2));
  double worst_hyp = 0.0, worst_k0 = 0.0;
  bool ok = true;
  for (int k = 0; k < 10; ++k) {
    const PhasePoint x = random_phase_point(kTorus, rng, 32, 0.75);
    const FlowTrajectory tr = flow(kTorus, x, spec, cfg, 0.3);
    const auto rows = representation_coefficients(kTorus, tr);
    ok = ok && rows.front().a == 0.0 && rows.front().b == 1.0;
    worst_k0 = std::max(worst_k0, rows.front().k_residual);
    for (const auto& r : rows) {
      worst_hyp = std::max(worst_hyp, std::abs(r.b * r.b - r.a * r.a - 1.0));
      ok = ok && r.a <= 0.0 && r.b >= 1.0;
    }
  }
  ok = ok && worst_hyp <= 1e-10 && worst_k0 <= 1e-10;
  return {ok, fmt("max |b^2 - a^2 - 1| = %.1e, K(0) = %.1e over 10 trajectories", worst_hyp, worst_k0)};
}

struct SweepCache {
  std::vector<double> grid;
  SweepResult result;
};

SweepCache& default_sweep() {
  static SweepCache cache = [] {
    SweepCache c;
    for (int i = 0; i < 20; ++i) c.grid.push_back(0.05 + (2.0 - 0.05) * i / 19.0);
    FlowConfig cfg;
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    c.result = orbit_sweep(kTorus, {default_loop()}, default_spec(), c.grid, cfg, static_cast<int>(std::min(hw, 8u)));
    return c;
  }();
  return cache;
}

Outcome minimax_behavior() {
  const SweepCache& s = default_sweep();
  const SweepResult& res = s.result;
  bool ok = true;
  double worst_mono = 0.0, worst_cont = 0.0, lo = 1e300, hi = -1e300;
  for (std::size_t i = 0; i < s.grid.size(); ++i) {
    if (!res.errors[i].empty()) return {false, "grid point failed: " + res.errors[i]};
    const double th = res.records[i].theta;
    lo = std::min(lo, th);
    hi = std::max(hi, th);
    ok = ok && th >= 0.0 && th <= res.alpha;
    if (i) {
      const double prev = res.records[i - 1].theta;
      worst_mono = std::max(worst_mono, th - prev);
      worst_cont = std::max(worst_cont, std::abs(th - prev) - perturbation_gap(default_spec(), s.grid[i - 1], s.grid[i]));
    }
  }
  ok = ok && worst_mono <= 1e-6 && worst_cont <= 1e-6;
  return {ok, fmt("theta in [%.6f, %.6f], alpha = %.6f, max increase = %.1e, continuity excess = %.1e", lo, hi,
                  res.alpha, worst_mono, worst_cont)};
}

Outcome closed_leaf() {
  const SweepCache& s = default_sweep();
  const SweepResult& res = s.result;
  const HamiltonianSpec spec = default_spec();
  for (std::size_t i = 0; i < res.records.size(); ++i) {
    const MinimaxRecord& rec = res.records[i];
    if (rec.classification.kind != CriticalKind::OnHypersurface || !rec.witness) continue;
    const PhasePoint& w = *rec.witness;
    const HamiltonianSpec sr = spec.with_r(rec.r);
    // analytic leaf: straight line in direction W with |p| solving h_r'(|p|) = |W|,
    // located by bisection on a finite-difference slope of h_r
    const Eigen::Vector2d wv(1.0, 0.0);
    auto slope = [&](double rho) { return (sr.h(rho + 1e-7) - sr.h(rho - 1e-7)) / 2e-7; };
    const int nodes = 257;
    const Eigen::MatrixXd ps = w.basis().sample(w.p.fourier(), nodes);
    const double rho_w = ps.rowwise().norm().mean();
    double best = 1e300;
    const double lo0 = sr.inner_radius(), hi0 = sr.outer_radius();
    const int scan = 2000;
    for (int k = 0; k < scan; ++k) {
      double a = lo0 + (hi0 - lo0) * k / scan, b = lo0 + (hi0 - lo0) * (k + 1) / scan;
      if ((slope(a) - 1.0) * (slope(b) - 1.0) > 0) continue;
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (a + b);
        ((slope(a) - 1.0) * (slope(mid) - 1.0) <= 0 ? b : a) = mid;
      }
      const double rho = 0.5 * (a + b);
      if (std::abs(rho - rho_w) < std::abs(best - rho_w)) best = rho;
    }
    double err = 0.0;
    const Eigen::VectorXd q0 = evaluate_loop(kTorus, w.loop, 0.0);
    for (int k = 0; k < nodes; ++k) {
      const double t = static_cast<double>(k) / nodes;
      err = std::max(err, (evaluate_loop(kTorus, w.loop, t) - q0 - wv * t).norm());
      err = std::max(err, (ps.row(k).transpose() - best * wv).norm());
    }
    const bool ok = rec.residual <= 1e-6 && rec.leaf_action > 0.0 && rec.leaf_action < res.leaf_bound && err <= 1e-4;
    return {ok, fmt("first hit r = %.4f: residual = %.1e, leaf action = %.6f in (0, %.6f), leaf match error = %.1e",
                    rec.r, rec.residual, rec.leaf_action, res.leaf_bound, err)};
  }
  return {false, "no on-hypersurface witness in the default sweep"};
}

Outcome convergence() {
  FlowConfig cfg;
  MinimaxRecord a = minimax_theta(kTorus, {default_loop()}, default_spec(1.0, 32), cfg);
  cfg.J = 64;
  MinimaxRecord b = minimax_theta(kTorus, {default_loop()}, default_spec(1.0, 64), cfg);
  const double diff = std::abs(a.theta - b.theta);
  return {diff <= 1e-3, fmt("theta(J=32) = %.9f, theta(J=64) = %.9f, difference = %.1e", a.theta, b.theta, diff)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"circle norm exactness", circle_norms},
      {"eigenvalue growth and eigenfield sup norm", spectrum_bounds},
      {"fractional power commutes with covariant derivative", commutation},
      {"negative-order embedded norm inequality", negative_inequality},
      {"action gradient vs finite differences", gradient_check},
      {"critical-point correspondence for the straight geodesic", critical_correspondence},
      {"fake-geodesic exclusion at r0", fake_exclusion},
      {"representation coefficients", representation},
      {"minimax monotonicity, bounds and continuity", minimax_behavior},
      {"closed-leaf detection", closed_leaf},
      {"truncation stability J=32 vs J=64", convergence},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %2zu %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str(), secs);
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
