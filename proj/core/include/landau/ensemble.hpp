#pragma once

#include "landau/oracles.hpp"
#include "landau/types.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>

namespace landau {

/// BKW profile started at the earliest time its density is nonnegative.
struct BkwInitial {
  BkwSpec bkw;
};

/// (1/4 pi) [exp(-|v - v1|^2/2) + exp(-|v - v2|^2/2)], v1 = (-2, 1), v2 = (0, -1).
struct BiMaxwellian2d {};

/// Shell profile exp(-S (|v| - sigma)^2 / sigma^2) in 3D, normalized to unit mass.
struct RosenbluthShell3d {
  double sigma = 0.3;
  double s = 10.0;
};

/// Centered Gaussian with diagonal covariance diag(p).
struct AnisotropicGaussian {
  Vec p;
};

using InitialCondition = std::variant<BkwInitial, BiMaxwellian2d, RosenbluthShell3d, AnisotropicGaussian>;

int dimension(const InitialCondition& ic);

/// Physical time at which the profile is sampled (nonzero only for BKW
/// parameter sets whose K(0) is below d/(d+2)).
double start_time(const InitialCondition& ic);

/// Exact log of the (normalized) initial density.
double initial_log_density(const InitialCondition& ic, const Eigen::Ref<const Vec>& v);

/// Canonical text id, e.g. "bkw:d=2,b=0.5,c=0.0625" or "anisotropic_gaussian:p=1.8,0.2,1".
std::string to_id(const InitialCondition& ic);

/// Inverse of to_id(). Throws std::invalid_argument("unknown preset ...").
InitialCondition parse_initial_condition(std::string_view id);

/// N particles in d dimensions. Storage is one column per particle, which is
/// the same memory layout as a row-major N x d array.
struct ParticleEnsemble {
  Mat velocities;   // dim x count
  Vec log_density;  // log f^n(v_i^n)
  double time = 0.0;
  std::string preset;

  Index count() const { return velocities.cols(); }
  int dim() const { return static_cast<int>(velocities.rows()); }

  /// Throws NumericalError on non-finite entries or a shape mismatch.
  void validate() const;
};

struct DiagnosticsRecord {
  double time = 0.0;
  double mass = 1.0;
  Vec momentum;
  double energy = 0.0;
  double entropy_estimate = 0.0;
  double loss_value = 0.0;
  long guard_hits = 0;
};

/// i.i.d. draw of n particles; log_density holds the exact initial log density.
ParticleEnsemble sample_initial(const InitialCondition& ic, Index n, std::uint64_t seed);

/// mass = 1, momentum = mean v, energy = mean |v|^2, entropy = mean log f.
DiagnosticsRecord moments(const ParticleEnsemble& ens);

/// (1/N) sum v_i v_i^T (about the origin).
Mat covariance(const ParticleEnsemble& ens);

}  // namespace landau
