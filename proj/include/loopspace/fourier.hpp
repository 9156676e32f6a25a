#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <utility>

namespace loopspace {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Real trigonometric basis {1, √2 cos 2πjt, √2 sin 2πjt}_{j≤J} tensored with ℝⁿ.
///
/// The basis is orthonormal in L²(0,1). A coefficient vector is the row-major
/// flattening of a (2J+1)×n matrix whose row m holds the coefficients of the
/// scalar basis function m (m = 0 constant, m = 2j−1 cosine, m = 2j sine), so
/// coefficient index = m·n + c. Sorting by index sorts by Laplacian eigenvalue.
class FourierBasis {
 public:
  FourierBasis(int dim, int modes) : dim_(dim), modes_(modes) {
    if (dim < 1) throw std::invalid_argument("FourierBasis: dimension must be positive");
    if (modes < 0) throw std::invalid_argument("FourierBasis: mode cutoff must be nonnegative");
  }

  int dim() const { return dim_; }
  int modes() const { return modes_; }
  int scalar_size() const { return 2 * modes_ + 1; }
  int size() const { return dim_ * scalar_size(); }

  int index_const(int c) const { return c; }
  int index_cos(int j, int c) const { return dim_ * (2 * j - 1) + c; }
  int index_sin(int j, int c) const { return dim_ * (2 * j) + c; }

  int mode_of(int idx) const { return (idx / dim_ + 1) / 2; }
  int coordinate_of(int idx) const { return idx % dim_; }

  /// Eigenvalue (2πj)² of −d²/dt² on the basis element `idx`.
  double laplacian_eigenvalue(int idx) const {
    const double w = kTwoPi * mode_of(idx);
    return w * w;
  }

  /// Scalar basis values at t, length 2J+1.
  Eigen::VectorXd scalar_values(double t) const {
    Eigen::VectorXd v(scalar_size());
    v(0) = 1.0;
    for (int j = 1; j <= modes_; ++j) {
      v(2 * j - 1) = std::numbers::sqrt2 * std::cos(kTwoPi * j * t);
      v(2 * j) = std::numbers::sqrt2 * std::sin(kTwoPi * j * t);
    }
    return v;
  }

  Eigen::Map<const RowMajorMatrix> as_matrix(const Eigen::VectorXd& coeffs) const {
    check_size(coeffs);
    return {coeffs.data(), scalar_size(), dim_};
  }

  Eigen::VectorXd evaluate(const Eigen::VectorXd& coeffs, double t) const {
    return as_matrix(coeffs).transpose() * scalar_values(t);
  }

  /// Values at the uniform nodes t_i = i/nodes, as a nodes×n matrix.
  Eigen::MatrixXd sample(const Eigen::VectorXd& coeffs, int nodes) const;

  /// Trapezoid projection of nodes×n samples onto the basis. Exact for
  /// trigonometric polynomials of degree ≤ J when nodes ≥ 2J+1.
  Eigen::VectorXd analyze(const Eigen::MatrixXd& samples) const;

  Eigen::VectorXd derivative(const Eigen::VectorXd& coeffs) const {
    check_size(coeffs);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(size());
    for (int j = 1; j <= modes_; ++j) {
      const double w = kTwoPi * j;
      for (int c = 0; c < dim_; ++c) {
        out(index_cos(j, c)) = w * coeffs(index_sin(j, c));
        out(index_sin(j, c)) = -w * coeffs(index_cos(j, c));
      }
    }
    return out;
  }

  /// Antisymmetric matrix of d/dt on coefficient vectors.
  Eigen::MatrixXd derivative_matrix() const {
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(size(), size());
    for (int j = 1; j <= modes_; ++j) {
      const double w = kTwoPi * j;
      for (int c = 0; c < dim_; ++c) {
        d(index_cos(j, c), index_sin(j, c)) = w;
        d(index_sin(j, c), index_cos(j, c)) = -w;
      }
    }
    return d;
  }

  /// Coefficients of a constant field.
  Eigen::VectorXd constant(const Eigen::VectorXd& value) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(size());
    out.head(dim_) = value;
    return out;
  }

  bool operator==(const FourierBasis& o) const { return dim_ == o.dim_ && modes_ == o.modes_; }

 private:
  void check_size(const Eigen::VectorXd& coeffs) const {
    if (coeffs.size() != size())
      throw std::invalid_argument("FourierBasis: coefficient vector has wrong length");
  }

  int dim_;
  int modes_;
};

/// Scalar basis sampled at uniform nodes: a nodes×(2J+1) matrix, shared
/// across callers. Thread-safe.
inline std::shared_ptr<const Eigen::MatrixXd> sampling_matrix(int modes, int nodes) {
  static std::mutex mutex;
  static std::map<std::pair<int, int>, std::shared_ptr<const Eigen::MatrixXd>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[{modes, nodes}];
  if (!slot) {
    auto b = std::make_shared<Eigen::MatrixXd>(nodes, 2 * modes + 1);
    const FourierBasis scalar(1, modes);
    for (int i = 0; i < nodes; ++i)
      b->row(i) = scalar.scalar_values(static_cast<double>(i) / nodes).transpose();
    slot = std::move(b);
  }
  return slot;
}

inline Eigen::MatrixXd FourierBasis::sample(const Eigen::VectorXd& coeffs, int nodes) const {
  const auto b = sampling_matrix(modes_, nodes);
  return (*b) * as_matrix(coeffs);
}

inline Eigen::VectorXd FourierBasis::analyze(const Eigen::MatrixXd& samples) const {
  if (samples.cols() != dim_)
    throw std::invalid_argument("FourierBasis::analyze: sample dimension mismatch");
  const int nodes = static_cast<int>(samples.rows());
  const auto b = sampling_matrix(modes_, nodes);
  RowMajorMatrix c = (b->transpose() * samples) / static_cast<double>(nodes);
  return Eigen::Map<const Eigen::VectorXd>(c.data(), c.size());
}

/// Number of quadrature nodes used for products of two degree-J polynomials
/// composed with a smooth nonlinearity.
inline int quadrature_nodes(int modes) { return 4 * modes + 1; }

/// Spectral derivative of a periodic real signal sampled at uniform nodes.
/// Uses every resolvable mode; the Nyquist mode (even length) is dropped.
inline Eigen::VectorXd spectral_derivative(const Eigen::VectorXd& samples) {
  const int m = static_cast<int>(samples.size());
  const int kmax = (m - 1) / 2;
  Eigen::VectorXd a = Eigen::VectorXd::Zero(kmax + 1);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(kmax + 1);
  for (int k = 1; k <= kmax; ++k) {
    for (int i = 0; i < m; ++i) {
      const double th = kTwoPi * k * i / m;
      a(k) += samples(i) * std::cos(th);
      b(k) += samples(i) * std::sin(th);
    }
    a(k) *= 2.0 / m;
    b(k) *= 2.0 / m;
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(m);
  for (int i = 0; i < m; ++i) {
    for (int k = 1; k <= kmax; ++k) {
      const double th = kTwoPi * k * i / m;
      out(i) += kTwoPi * k * (-a(k) * std::sin(th) + b(k) * std::cos(th));
    }
  }
  return out;
}

}  // namespace loopspace
