#pragma once

#include "landau/ensemble.hpp"
#include "landau/kernels.hpp"
#include "landau/net.hpp"
#include "landau/rng.hpp"

#include <cmath>
#include <random>

namespace landau::test {

inline Mat random_matrix(Index rows, Index cols, std::uint64_t seed, double scale = 1.0) {
  Pcg32 rng(seed, 99);
  std::normal_distribution<double> normal;
  Mat m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = scale * normal(rng);
  return m;
}

inline ParticleEnsemble random_ensemble(int d, Index n, std::uint64_t seed, double scale = 1.0) {
  ParticleEnsemble e;
  e.velocities = random_matrix(d, n, seed, scale);
  e.log_density = Vec::Zero(n);
  return e;
}

/// Net with every parameter drawn N(0, scale^2), biases included.
inline VectorFieldNet random_net(int d, std::uint64_t seed, double scale = 0.4) {
  VectorFieldNet net(d);
  net.set_params(random_matrix(net.num_params(), 1, seed, scale).col(0));
  return net;
}

// Brute-force A(z) built from the textbook definition, no shared helpers.
inline Mat brute_a(const Vec& z, double gamma, double c) {
  const double r = z.norm();
  if (r == 0.0) return Mat::Zero(z.size(), z.size());
  return c * std::pow(r, gamma + 2.0) * (Mat::Identity(z.size(), z.size()) - z * z.transpose() / (r * r));
}

}  // namespace landau::test
