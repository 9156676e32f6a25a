#pragma once

#include "action.hpp"
#include "loop.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <random>

namespace loopspace {

/// Random coefficient vector with spectrally decaying modes, unit L² norm.
template <typename Rng>
Eigen::VectorXd random_field(const FourierBasis& basis, Rng& rng, double decay = 2.0) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd v(basis.size());
  for (int j = 0; j < basis.size(); ++j) v(j) = gauss(rng) / std::pow(1.0 + basis.mode_of(j), decay);
  return v / v.norm();
}

/// A phase point whose fiber norm is spread over every branch of H_r: a
/// constant part of random length in [0, pmax] plus a small oscillating part.
template <typename Rng>
PhasePoint random_phase_point(const ModelManifold& m, Rng& rng, int modes, double s,
                              double pmax = 1.2, double loop_amplitude = 0.05,
                              double ripple = 0.02) {
  const LoopPath q = random_loop(m, rng, std::max(1, modes / 4), loop_amplitude, 1);
  const FourierBasis basis(m.dim(), modes);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd dir(m.dim());
  for (int c = 0; c < m.dim(); ++c) dir(c) = gauss(rng);
  dir.normalize();
  Eigen::VectorXd p = basis.constant(pmax * unit(rng) * dir);
  p += ripple * random_field(basis, rng);
  return make_phase_point(m, q, p, s, modes);
}

}  // namespace loopspace
