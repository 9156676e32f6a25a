// Intrinsic vs embedded fractional norms of the rotated velocity field along
// the n-fold circle q_n(t) = e^{2πint}.
#include <loopspace/loopspace.hpp>

#include <cmath>
#include <cstdio>

using namespace loopspace;

int main() {
  const ModelManifold circle = ModelManifold::embedded_circle();
  const FourierBasis basis(1, 8);
  const Eigen::VectorXd p = basis.constant(Eigen::VectorXd::Ones(1));
  std::printf("%3s %6s %14s %16s %16s\n", "n", "r", "intrinsic", "embedded", "closed form");
  for (int n = 1; n <= 8; ++n) {
    const LoopPath q = straight_loop(circle, Eigen::VectorXi::Constant(1, n));
    const FramePtr f = make_frame(circle, q, basis.modes());
    const FiberField pn = FiberField::from_fourier(f, p);
    for (double r : {0.25, 0.5, 1.0}) {
      const double closed = std::pow(1.0 + std::pow(kTwoPi * n, 2), r);
      std::printf("%3d %6.2f %14.10f %16.8f %16.8f\n", n, r, inner_r(r, pn, pn),
                  inner_r_emb(circle, q, basis, r, p, p), closed);
    }
  }
}
