#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace loopspace {

/// Quintic smoothstep S(x) = 6x⁵ − 15x⁴ + 10x³ on [0,1], clamped outside.
struct Smoothstep {
  static double value(double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    return x * x * x * (10.0 + x * (-15.0 + 6.0 * x));
  }
  static double d1(double x) {
    if (x <= 0.0 || x >= 1.0) return 0.0;
    const double y = x * (1.0 - x);
    return 30.0 * y * y;
  }
  static double d2(double x) {
    if (x <= 0.0 || x >= 1.0) return 0.0;
    return 60.0 * x * (1.0 - x) * (1.0 - 2.0 * x);
  }
};

enum class Region { Bounded, Shell, Plateau, Outer };

inline const char* region_name(Region r) {
  switch (r) {
    case Region::Bounded: return "bounded";
    case Region::Shell: return "shell";
    case Region::Plateau: return "plateau";
    case Region::Outer: return "outer";
  }
  return "?";
}

/// The family H_r(q,p) = h_r(|p|) on a flat cotangent bundle, built around
/// Σ = {|p| = ρ*} with the radial thickening Ψ(σ, (q,p)) = (q, e^σ p).
///
///   h = 0                   |p| ≤ ρ* e^{−δ}
///   h = r χ(σ)              |p| = ρ* e^σ, |σ| < δ
///   h = r                   ρ* e^{δ} ≤ |p| ≤ ρ₁
///   h = φ(|p|) + r          |p| > ρ₁
struct HamiltonianSpec {
  double rho0 = 0.2;
  double rho1 = 0.4;
  double rho_star = 0.3;
  double delta = 0.1;
  double r = 1.0;
  int J = 32;
  double s = 0.75;

  double thickening_radius() const {
    return std::min(std::log(rho1 / rho_star), std::log(rho_star / rho0));
  }
  double inner_radius() const { return rho_star * std::exp(-delta); }
  double outer_radius() const { return rho_star * std::exp(delta); }

  void validate() const {
    auto fail = [](const std::string& m) { throw std::invalid_argument("HamiltonianSpec: " + m); };
    if (!(rho0 > 0.0 && rho0 < rho1)) fail("need 0 < rho0 < rho1");
    if (!(rho_star > rho0 && rho_star < rho1)) fail("need rho0 < rho_star < rho1");
    if (!(delta > 0.0 && delta < thickening_radius())) fail("need 0 < delta < a");
    if (!(r > 0.0)) fail("need r > 0");
    if (J < 1) fail("need J >= 1");
    if (!(s > 0.5 && s < 1.0)) fail("need 1/2 < s < 1");
  }

  HamiltonianSpec with_r(double value) const {
    HamiltonianSpec o = *this;
    o.r = value;
    return o;
  }

  // χ on the thickening coordinate
  double chi(double sigma) const { return Smoothstep::value((sigma + delta) / (2 * delta)); }
  double chi1(double sigma) const { return Smoothstep::d1((sigma + delta) / (2 * delta)) / (2 * delta); }
  double chi2(double sigma) const {
    return Smoothstep::d2((sigma + delta) / (2 * delta)) / (4 * delta * delta);
  }

  // φ: quintic Hermite join from 0 at ρ₁ to ½ρ² at 2ρ₁, matching to second order at both ends
  double phi(double rho) const {
    if (rho <= rho1) return 0.0;
    if (rho >= 2 * rho1) return 0.5 * rho * rho;
    const double u = (rho - rho1) / rho1;
    return rho1 * rho1 * u * u * u * (12.5 + u * (-17.0 + 6.5 * u));
  }
  double phi1(double rho) const {
    if (rho <= rho1) return 0.0;
    if (rho >= 2 * rho1) return rho;
    const double u = (rho - rho1) / rho1;
    return rho1 * u * u * (37.5 + u * (-68.0 + 32.5 * u));
  }
  double phi2(double rho) const {
    if (rho <= rho1) return 0.0;
    if (rho >= 2 * rho1) return 1.0;
    const double u = (rho - rho1) / rho1;
    return u * (75.0 + u * (-204.0 + 130.0 * u));
  }
  double phi3(double rho) const {
    if (rho <= rho1 || rho >= 2 * rho1) return 0.0;
    const double u = (rho - rho1) / rho1;
    return (75.0 + u * (-408.0 + 390.0 * u)) / rho1;
  }

  /// Branch of |p| = rho, with tie-band `band` at the branch boundaries.
  Region region(double rho, double band = 1e-9) const {
    if (rho <= inner_radius() + band) return Region::Bounded;
    if (rho < outer_radius() - band) return Region::Shell;
    if (rho <= rho1 + band) return Region::Plateau;
    return Region::Outer;
  }

  /// σ with |p| = ρ* e^σ.
  double sigma_of(double rho) const { return std::log(rho / rho_star); }

  double h(double rho) const {
    if (!std::isfinite(rho) || rho < 0.0) throw std::invalid_argument("H: invalid |p|");
    if (rho <= inner_radius()) return 0.0;
    if (rho < outer_radius()) return r * chi(sigma_of(rho));
    if (rho <= rho1) return r;
    return phi(rho) + r;
  }
  double h1(double rho) const {
    if (rho <= inner_radius() || (rho >= outer_radius() && rho <= rho1)) return 0.0;
    if (rho < outer_radius()) return r * chi1(sigma_of(rho)) / rho;
    return phi1(rho);
  }
  double h2(double rho) const {
    if (rho <= inner_radius() || (rho >= outer_radius() && rho <= rho1)) return 0.0;
    if (rho < outer_radius()) {
      const double sg = sigma_of(rho);
      return r * (chi2(sg) - chi1(sg)) / (rho * rho);
    }
    return phi2(rho);
  }

  double evaluate(const Eigen::VectorXd& /*q*/, const Eigen::VectorXd& p) const {
    return h(p.norm());
  }

  /// ∂_p H
  Eigen::VectorXd dp(const Eigen::VectorXd& p) const {
    const double rho = p.norm();
    if (rho == 0.0) return Eigen::VectorXd::Zero(p.size());
    return (h1(rho) / rho) * p;
  }

  /// ∂²_p H = h″ uuᵀ + (h′/ρ)(1 − uuᵀ)
  Eigen::MatrixXd dpp(const Eigen::VectorXd& p) const {
    const int n = static_cast<int>(p.size());
    const double rho = p.norm();
    if (rho <= inner_radius()) return Eigen::MatrixXd::Zero(n, n);
    const Eigen::VectorXd u = p / rho;
    const Eigen::MatrixXd uu = u * u.transpose();
    return h2(rho) * uu + (h1(rho) / rho) * (Eigen::MatrixXd::Identity(n, n) - uu);
  }

  /// δ_r = H_r − ½|p|²
  double perturbation(double rho) const { return h(rho) - 0.5 * rho * rho; }
};

/// X_H = (∂_p H, −∂_q H); the flat models have ∂_q H = 0.
inline std::pair<Eigen::VectorXd, Eigen::VectorXd> hamiltonian_vector_field(
    const HamiltonianSpec& spec, const Eigen::VectorXd& /*q*/, const Eigen::VectorXd& p) {
  return {spec.dp(p), Eigen::VectorXd::Zero(p.size())};
}

/// Action φ′(p₀)p₀ − φ(p₀) − r of the fake closed geodesic with |p(0)| = p₀.
inline double fake_geodesic_action(const HamiltonianSpec& spec, double p0) {
  if (!(p0 > spec.rho1)) throw std::invalid_argument("fake_geodesic_action: need p0 > rho1");
  return spec.phi1(p0) * p0 - spec.phi(p0) - spec.r;
}

/// 1 + max_{ρ ≤ 2ρ₁} |φ′(ρ)ρ − φ(ρ)|: dense grid, then Newton on φ″ = 0.
inline double r0_threshold(const HamiltonianSpec& spec) {
  auto g = [&](double rho) { return std::abs(spec.phi1(rho) * rho - spec.phi(rho)); };
  const int nodes = 10000;
  const double hi = 2.0 * spec.rho1;
  double best = 0.0, arg = 0.0;
  for (int i = 0; i <= nodes; ++i) {
    const double rho = hi * i / nodes;
    if (g(rho) > best) best = g(rho), arg = rho;
  }
  if (arg > spec.rho1 && arg < hi) {
    double x = arg;
    for (int it = 0; it < 20; ++it) {
      const double d3 = spec.phi3(x);
      if (d3 == 0.0) break;
      const double step = spec.phi2(x) / d3;
      x -= step;
      if (!(x > spec.rho1 && x < hi)) break;
      if (std::abs(step) < 1e-15) {
        best = std::max(best, g(x));
        break;
      }
    }
  }
  return 1.0 + best;
}

/// β = sup_ρ (½ρ² − φ(ρ)), the r-independent bound on −δ_r.
inline double perturbation_bound(const HamiltonianSpec& spec) {
  double best = 0.0;
  const int nodes = 20000;
  for (int i = 0; i <= nodes; ++i) {
    const double rho = 2.0 * spec.rho1 * i / nodes;
    best = std::max(best, 0.5 * rho * rho - spec.phi(rho));
  }
  return best;
}

/// α = sup_ρ (cρ − ½ρ² + β) = ½c² + β, where c bounds ⟨q̇, p⟩/‖p‖ on the fiber.
inline double fiber_action_bound(const HamiltonianSpec& spec, double c) {
  return 0.5 * c * c + perturbation_bound(spec);
}

/// sup over all |p| of |δ_{r1} − δ_{r2}| = |r1 − r2| (attained on the plateau).
inline double perturbation_gap(const HamiltonianSpec& spec, double r1, double r2) {
  double best = 0.0;
  const int nodes = 4000;
  const double hi = 3.0 * spec.rho1;
  const HamiltonianSpec a = spec.with_r(r1), b = spec.with_r(r2);
  for (int i = 0; i <= nodes; ++i) {
    const double rho = hi * i / nodes;
    best = std::max(best, std::abs(a.perturbation(rho) - b.perturbation(rho)));
  }
  return best;
}

}  // namespace loopspace
