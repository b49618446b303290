#pragma once

#include "landau/types.hpp"

#include <cmath>

namespace landau {

/// Parameters of the collision kernel A(z) = c_gamma |z|^(gamma+2) Pi(z).
///
/// `min_dist` is the coincidence guard: every pairwise term is defined as
/// exactly zero when |v_i - v_j| <= min_dist. Use with_default_guard() unless
/// a test needs something else.
/// gamma may sit at the endpoint -dim-1 (2D Coulomb runs use gamma = -3).
struct KernelSpec {
  int dim = 2;
  double gamma = 0.0;
  double c_gamma = 1.0;
  double min_dist = 0.0;

  /// min_dist = 0 for gamma >= -2 and 1e-10 for the Coulomb-like range.
  static KernelSpec with_default_guard(int dim, double gamma, double c_gamma);

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

/// Pi(z) = I - z z^T / |z|^2. Throws std::domain_error for z = 0.
Mat projection(const Eigen::Ref<const Vec>& z);

/// A(z); the zero matrix when |z| <= min_dist.
Mat collision_matrix(const Eigen::Ref<const Vec>& z, const KernelSpec& spec);

/// 1/2 (u_i - u_j)^T A(v_i - v_j) (u_i - u_j).
double pair_quadratic(const Eigen::Ref<const Vec>& v_i, const Eigen::Ref<const Vec>& v_j,
                      const Eigen::Ref<const Vec>& u_i, const Eigen::Ref<const Vec>& u_j,
                      const KernelSpec& spec);

/// A(v_i - v_j) : grad_u_i - (d-1) c_gamma |z|^gamma z . (u_i - u_j), z = v_i - v_j.
/// grad_u_i(a, b) = d u_a / d v_b at v_i.
double pair_logdet_rate(const Eigen::Ref<const Vec>& v_i, const Eigen::Ref<const Vec>& v_j,
                        const Eigen::Ref<const Vec>& u_i, const Eigen::Ref<const Vec>& u_j,
                        const Eigen::Ref<const Mat>& grad_u_i, const KernelSpec& spec);

namespace detail {

/// Radial factors of one pair, shared by every hot loop.
struct PairGeometry {
  double rg = 0.0;    // |z|^gamma
  double rg2 = 0.0;   // |z|^(gamma+2)
  double rgm2 = 0.0;  // |z|^(gamma-2)
};

/// |z|^gamma from |z|^2 with the common exponents special-cased.
inline double radial_power(double r2, double gamma) {
  if (gamma == 0.0) return 1.0;
  if (gamma == -3.0) return 1.0 / (r2 * std::sqrt(r2));
  if (gamma == -2.0) return 1.0 / r2;
  if (gamma == 1.0) return std::sqrt(r2);
  return std::pow(r2, 0.5 * gamma);
}

/// False when the pair is inside the guard (or coincident); geometry untouched then.
inline bool pair_geometry(double r2, const KernelSpec& spec, PairGeometry& g) {
  if (r2 <= spec.min_dist * spec.min_dist || r2 == 0.0) return false;
  g.rg = radial_power(r2, spec.gamma);
  g.rg2 = g.rg * r2;
  g.rgm2 = g.rg / r2;
  return true;
}

}  // namespace detail
}  // namespace landau
