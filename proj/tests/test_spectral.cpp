#include <loopspace/loopspace.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace loopspace;

namespace {

Eigen::VectorXd gaussian(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = g(rng);
  return v;
}

Eigen::VectorXd sorted(Eigen::VectorXd v) {
  std::sort(v.data(), v.data() + v.size());
  return v;
}

}  // namespace

TEST(Spectrum, StraightTorusLoopHasFourierEigenvalues) {
  const ModelManifold m = ModelManifold::flat_torus(2);
  const SpectralFrame f = eigendecompose(m, straight_loop(m, Eigen::Vector2i(1, 0)), 5, FrameMethod::Dense);
  Eigen::VectorXd expect(f.size());
  for (int j = 0; j < f.size(); ++j) expect(j) = std::pow(kTwoPi * f.basis.mode_of(j), 2);
  EXPECT_LT((f.eigenvalues - sorted(expect)).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_EQ(f.kernel_dim, 2);
}

TEST(Spectrum, DenseAgreesWithAnalytic) {
  std::mt19937_64 rng(31);
  const ModelManifold m = ModelManifold::flat_torus(3);
  const LoopPath q = random_loop(m, rng, 3, 0.2);
  const SpectralFrame a = eigendecompose(m, q, 6, FrameMethod::Analytic);
  const SpectralFrame d = eigendecompose(m, q, 6, FrameMethod::Dense);
  EXPECT_TRUE(a.identity());
  EXPECT_FALSE(d.identity());
  EXPECT_LT((sorted(a.eigenvalues) - d.eigenvalues).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_EQ(a.kernel_dim, d.kernel_dim);
  const Eigen::MatrixXd& v = *d.vectors;
  EXPECT_LT((v.transpose() * v - Eigen::MatrixXd::Identity(d.size(), d.size())).norm(), 1e-10);
}

TEST(Spectrum, CircleKernelIsOneDimensional) {
  const ModelManifold c = ModelManifold::embedded_circle();
  const SpectralFrame f = eigendecompose(c, straight_loop(c, Eigen::VectorXi::Constant(1, 3)), 8, FrameMethod::Dense);
  EXPECT_EQ(f.kernel_dim, 1);
  EXPECT_EQ(f.eigenvalues(0), 0.0);
}

TEST(Spectrum, EigenfieldsAreBoundedBySqrtTwo) {
  std::mt19937_64 rng(37);
  const ModelManifold m = ModelManifold::flat_torus(2);
  const LoopPath q = random_loop(m, rng, 2, 0.1);
  for (auto method : {FrameMethod::Analytic, FrameMethod::Dense}) {
    const SpectralFrame f = eigendecompose(m, q, 6, method);
    for (int j = 0; j < f.size(); ++j) {
      EXPECT_NEAR(f.eigenfield(j).norm(), 1.0, 1e-12);
      EXPECT_LE(sup_norm(f.basis, f.eigenfield(j)), std::sqrt(2.0) + 1e-6);
    }
  }
}

TEST(Spectrum, RejectsUnderresolvedLoop) {
  std::mt19937_64 rng(41);
  const ModelManifold m = ModelManifold::flat_torus(2);
  EXPECT_THROW(eigendecompose(m, random_loop(m, rng, 5, 0.1), 3), std::invalid_argument);
}

TEST(Spectrum, GrowthConstantsHold) {
  std::mt19937_64 rng(43);
  const ModelManifold m = ModelManifold::flat_torus(2);
  for (int k = 0; k < 5; ++k) {
    const LoopPath q = random_loop(m, rng, 3, 0.2);
    const SpectralFrame f = eigendecompose(m, q, 8, FrameMethod::Dense);
    const GrowthConstants g = fit_growth_constants(m, q, f);
    EXPECT_GT(g.c, 0.0);
    for (int j = 0; j < f.size(); ++j) {
      const double j2 = static_cast<double>(j) * j;
      EXPECT_LE(g.c * (j2 - g.d), f.eigenvalues(j) * (1 + 1e-12) + 1e-12);
      EXPECT_LE(f.eigenvalues(j), g.C * (j2 + g.d) * (1 + 1e-12));
    }
  }
}

TEST(FrameCache, ReusesFrames) {
  const ModelManifold m = ModelManifold::flat_torus(2);
  const LoopPath q = straight_loop(m, Eigen::Vector2i(0, 1));
  FrameCache cache;
  const FramePtr a = cache.get(m, q, 4), b = cache.get(m, q, 4), c = cache.get(m, q, 5);
  EXPECT_EQ(a.get(), b.get());
  EXPECT_NE(a.get(), c.get());
  EXPECT_EQ(cache.size(), 2u);
}

TEST(Sobolev, ZeroOrderIsL2) {
  std::mt19937_64 rng(47);
  const ModelManifold m = ModelManifold::flat_torus(2);
  const FramePtr f = make_frame(m, random_loop(m, rng, 2, 0.1), 4, FrameMethod::Dense);
  const Eigen::VectorXd a = gaussian(f->size(), rng), b = gaussian(f->size(), rng);
  const FiberField x = FiberField::from_fourier(f, a), y = FiberField::from_fourier(f, b);
  EXPECT_NEAR(inner_r(0.0, x, y), a.dot(b), 1e-10);
  EXPECT_LT((x.fourier() - a).norm(), 1e-12);
}

TEST(Sobolev, CircleExample) {
  const ModelManifold c = ModelManifold::embedded_circle();
  const FourierBasis b(1, 4);
  const Eigen::VectorXd one = b.constant(Eigen::VectorXd::Ones(1));
  const LoopPath q1 = straight_loop(c, Eigen::VectorXi::Constant(1, 1));
  const FiberField p1 = FiberField::from_fourier(make_frame(c, q1, 4), one);
  EXPECT_NEAR(norm_r(1.0, p1), 1.0, 1e-14);
  EXPECT_NEAR(inner_r(1.0, fractional_apply(1.0, p1), p1), 1.0, 1e-14);
  EXPECT_NEAR(inner_r_emb(c, q1, b, 1.0, one, one), 1 + std::pow(kTwoPi, 2), 1e-9);
  const LoopPath q2 = straight_loop(c, Eigen::VectorXi::Constant(1, 2));
  EXPECT_NEAR(inner_r_emb(c, q2, b, 0.5, one, one), std::sqrt(1 + 16 * M_PI * M_PI), 1e-9);
}

TEST(Sobolev, AmbientRouteReproducesCircleExample) {
  const ModelManifold c = ModelManifold::embedded_circle();
  const FourierBasis b(1, 4);
  const Eigen::VectorXd one = b.constant(Eigen::VectorXd::Ones(1));
  for (int n = 1; n <= 6; ++n) {
    const LoopPath q = straight_loop(c, Eigen::VectorXi::Constant(1, n));
    for (double r : {0.25, 0.5, 1.0})
      EXPECT_NEAR(inner_r_emb_ambient(c, q, b, r, one, one), std::pow(1 + std::pow(kTwoPi * n, 2), r), 1e-8);
  }
}

TEST(Sobolev, MismatchedFramesAreRejected) {
  const ModelManifold m = ModelManifold::flat_torus(1);
  const FramePtr a = make_frame(m, straight_loop(m, Eigen::VectorXi::Constant(1, 1)), 3);
  const FramePtr b = make_frame(m, straight_loop(m, Eigen::VectorXi::Constant(1, 2)), 3);
  const Eigen::VectorXd v = Eigen::VectorXd::Ones(a->size());
  EXPECT_THROW(inner_r(0.5, FiberField{a, v}, FiberField{b, v}), FrameMismatch);
}

TEST(Sobolev, CommutesWithCovariantDerivative) {
  std::mt19937_64 rng(53);
  const ModelManifold m = ModelManifold::flat_torus(2);
  const LoopPath q = random_loop(m, rng, 2, 0.1);
  const FramePtr f = make_frame(m, q, 6, FrameMethod::Dense);
  const FiberField xi = FiberField::from_fourier(f, gaussian(f->size(), rng));
  for (double r : {-1.0, -0.3, 0.5, 1.0}) {
    const Eigen::VectorXd lhs = fractional_apply(r, FiberField{f, f->derivative(xi.coeffs)}).coeffs;
    const Eigen::VectorXd rhs = f->derivative(fractional_apply(r, xi).coeffs);
    EXPECT_LT((lhs - rhs).norm(), 1e-9 * (1 + lhs.norm()));
  }
}

TEST(Sobolev, AdjointInclusion) {
  std::mt19937_64 rng(59);
  const ModelManifold m = ModelManifold::flat_torus(2);
  const FramePtr f = make_frame(m, random_loop(m, rng, 2, 0.1), 4);
  const FiberField v{f, gaussian(f->size(), rng)}, w{f, gaussian(f->size(), rng)};
  const double s = 0.7;
  // ⟨ȷ* v, w⟩_{1−s} = ⟨v, w⟩_{L²}
  EXPECT_NEAR(inner_r(1 - s, adjoint_inclusion(s, v), w), inner_r(0.0, v, w), 1e-10);
  EXPECT_THROW(adjoint_inclusion(0.4, v), std::invalid_argument);
}

TEST(Sobolev, EmbeddedOperatorDominatesIntrinsic) {
  std::mt19937_64 rng(61);
  for (const auto& m : {ModelManifold::flat_torus(2), ModelManifold::embedded_circle()}) {
    const LoopPath q = random_loop(m, rng, 2, 0.1);
    const FourierBasis b(m.dim(), 5);
    const Eigen::MatrixXd e = embedded_operator(m, q, b);
    const Eigen::MatrixXd rest = e - Eigen::MatrixXd::Identity(b.size(), b.size()) - laplacian_matrix(m, q, b);
    EXPECT_GT(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(rest).eigenvalues().minCoeff(), -1e-9);
  }
}

TEST(Sobolev, NegativeOrderInequality) {
  std::mt19937_64 rng(67);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const ModelManifold m = ModelManifold::flat_torus(2);
  for (int k = 0; k < 20; ++k) {
    const LoopPath q = random_loop(m, rng, 2, 0.2);
    const FramePtr f = make_frame(m, q, 5);
    const Eigen::VectorXd v = gaussian(f->size(), rng);
    const double r = u(rng);
    const double emb = std::sqrt(inner_r_emb(m, q, f->basis, -r, v, v));
    EXPECT_LE(emb, norm_r(-r, FiberField::from_fourier(f, v)) + 1e-10);
  }
}

TEST(Sobolev, SampledEmbeddedPairing) {
  const ModelManifold c = ModelManifold::embedded_circle();
  const LoopPath q = straight_loop(c, Eigen::VectorXi::Constant(1, 2));
  const FourierBasis b(1, 3);
  const TangentFieldSamples p = field_from_coefficients(q, b, b.constant(Eigen::VectorXd::Ones(1)), 32);
  EXPECT_NEAR(inner_r_emb(c, 1.0, p, p, 3), 1 + std::pow(2 * kTwoPi, 2), 1e-8);
  EXPECT_THROW(inner_r_emb(c, q, b, 1.5, Eigen::VectorXd::Ones(b.size()), Eigen::VectorXd::Ones(b.size())),
               std::invalid_argument);
}
