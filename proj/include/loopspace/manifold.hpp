#pragma once

#include "fourier.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace loopspace {

/// Flat torus ℝⁿ / ⊕ L_c ℤ with the Euclidean metric, together with the
/// isometric embedding into ℝ²ⁿ as a product of circles of radius L_c/2π.
/// The circle S¹ is the case n = 1, L = 2π.
class ModelManifold {
 public:
  static ModelManifold flat_torus(int n, double period = 1.0) {
    return ModelManifold("flat-torus", std::vector<double>(n, period));
  }
  static ModelManifold embedded_circle() { return ModelManifold("circle", {kTwoPi}); }

  ModelManifold(std::string name, std::vector<double> periods)
      : name_(std::move(name)), periods_(std::move(periods)) {
    if (periods_.empty()) throw std::invalid_argument("ModelManifold: empty period list");
    for (double l : periods_)
      if (!(l > 0.0)) throw std::invalid_argument("ModelManifold: periods must be positive");
  }

  const std::string& name() const { return name_; }
  int dim() const { return static_cast<int>(periods_.size()); }
  int ambient_dim() const { return 2 * dim(); }
  double period(int c) const { return periods_.at(c); }
  const std::vector<double>& periods() const { return periods_; }

  double injectivity_radius() const {
    return 0.5 * *std::min_element(periods_.begin(), periods_.end());
  }

  Eigen::VectorXd embed(const Eigen::VectorXd& x) const {
    Eigen::VectorXd y(ambient_dim());
    for (int c = 0; c < dim(); ++c) {
      const double rad = periods_[c] / kTwoPi;
      const double th = angle(x, c);
      y(2 * c) = rad * std::cos(th);
      y(2 * c + 1) = rad * std::sin(th);
    }
    return y;
  }

  /// dι_x ξ
  Eigen::VectorXd push(const Eigen::VectorXd& x, const Eigen::VectorXd& xi) const {
    Eigen::VectorXd v(ambient_dim());
    for (int c = 0; c < dim(); ++c) {
      const double th = angle(x, c);
      v(2 * c) = -xi(c) * std::sin(th);
      v(2 * c + 1) = xi(c) * std::cos(th);
    }
    return v;
  }

  /// Tangential projection followed by the inverse of dι_x.
  Eigen::VectorXd pull(const Eigen::VectorXd& x, const Eigen::VectorXd& v) const {
    Eigen::VectorXd xi(dim());
    for (int c = 0; c < dim(); ++c) {
      const double th = angle(x, c);
      xi(c) = -v(2 * c) * std::sin(th) + v(2 * c + 1) * std::cos(th);
    }
    return xi;
  }

  /// Normal part of d/dt (dι ξ) along a curve with velocity xdot: the second
  /// fundamental form II(xdot, ξ).
  Eigen::VectorXd normal_term(const Eigen::VectorXd& x, const Eigen::VectorXd& xdot,
                              const Eigen::VectorXd& xi) const {
    Eigen::VectorXd v(ambient_dim());
    for (int c = 0; c < dim(); ++c) {
      const double th = angle(x, c);
      const double k = xi(c) * xdot(c) * kTwoPi / periods_[c];
      v(2 * c) = -k * std::cos(th);
      v(2 * c + 1) = -k * std::sin(th);
    }
    return v;
  }

  /// Γ(xdot, ξ) in the global flat chart.
  Eigen::VectorXd christoffel_contraction(const Eigen::VectorXd& /*x*/,
                                          const Eigen::VectorXd& /*xdot*/,
                                          const Eigen::VectorXd& /*xi*/) const {
    return Eigen::VectorXd::Zero(dim());
  }

  /// R(u, v)w
  Eigen::VectorXd curvature(const Eigen::VectorXd& /*x*/, const Eigen::VectorXd& /*u*/,
                            const Eigen::VectorXd& /*v*/, const Eigen::VectorXd& /*w*/) const {
    return Eigen::VectorXd::Zero(dim());
  }

  /// Sectional curvature bound |K| ≤ κ.
  double curvature_bound() const { return 0.0; }

 private:
  double angle(const Eigen::VectorXd& x, int c) const { return kTwoPi * x(c) / periods_[c]; }

  std::string name_;
  std::vector<double> periods_;
};

}  // namespace loopspace
