#pragma once

#include "landau/types.hpp"

#include <iosfwd>
#include <span>

namespace landau {

/// Parameters of the BKW self-similar solution for the Maxwellian kernel
/// A(z) = c_gamma (|z|^2 I - z z^T):
///
///   f(t, v) = (2 pi K)^(-d/2) exp(-|v|^2 / 2K) [((d+2)K - d)/(2K) + (1-K)/(2K^2) |v|^2]
///   K(t)    = 1 - bkw_b exp(-2 c_gamma (d-1) t)
///
/// The density is nonnegative only while K >= d/(d+2); evaluation outside
/// that region throws.
struct BkwSpec {
  int dim = 2;
  double bkw_b = 0.5;
  double c_gamma = 1.0 / 16.0;

  void validate() const;
  double k_of_t(double t) const;
  /// Earliest t >= 0 with K(t) >= d/(d+2). Zero for the 2D b = 1/2 case.
  double earliest_valid_time() const;
};

double bkw_density(const BkwSpec& spec, double t, const Eigen::Ref<const Vec>& v);
double bkw_log_density(const BkwSpec& spec, double t, const Eigen::Ref<const Vec>& v);

/// bkw_density convolved with N(0, eps^2 I), i.e. the expectation of a
/// Gaussian KDE of bandwidth eps built from exact samples:
///   (2 pi s2)^(-d/2) exp(-|v|^2/2 s2) [a + b (K^2 |v|^2 / s2^2 + d K eps^2 / s2)],  s2 = K + eps^2
double bkw_smoothed_density(const BkwSpec& spec, double t, double eps, const Eigen::Ref<const Vec>& v);

/// Tensor-grid quadrature of f log f over [-extent, extent]^d, d in {2, 3}.
/// points_per_axis <= 0 picks the default (400 in 2D, 160 in 3D).
double bkw_entropy(const BkwSpec& spec, double t, int points_per_axis = 0, double extent = 8.0);

/// Same grid, integrates f. Used as a normalization check.
double bkw_mass(const BkwSpec& spec, double t, int points_per_axis = 0, double extent = 8.0);

/// Entropy of the standard Maxwellian: -(d/2)(1 + log 2 pi).
double maxwellian_entropy(int dim);

/// Exact second-moment matrix of the Maxwellian-kernel flow started from a
/// centered Gaussian with diagonal covariance p0 (unit collision strength):
/// P_ii(t) = E/d - (E/d - p0_i) exp(-4 d t), E = sum p0.
Mat covariance_exact(const Eigen::Ref<const Vec>& p0, double t);

/// Gaussian-kernel density estimate from particle columns:
/// (1/N) sum_i (2 pi eps^2)^(-d/2) exp(-|v - v_i|^2 / 2 eps^2).
/// `particles` is dim x N, `queries` is dim x M.
Vec kde_density(const Eigen::Ref<const Mat>& particles, double eps,
                const Eigen::Ref<const Mat>& queries);

/// sqrt(sum_ij (a_ij - b_ij)^2).
double frobenius_error(const Eigen::Ref<const Mat>& a, const Eigen::Ref<const Mat>& b);

/// Uniform tensor grid in 2D, or the z = 0 slice of a 3D grid, as columns.
Mat slice_grid(int dim, int points_per_axis, double extent);

/// Relative discrete L2 error ||a - b|| / ||b|| over matching grid values.
double relative_l2(const Eigen::Ref<const Vec>& approx, const Eigen::Ref<const Vec>& exact);

/// Writes "x0,x1,...,value" rows for a grid dump.
void write_grid_csv(std::ostream& os, const Eigen::Ref<const Mat>& points,
                    const Eigen::Ref<const Vec>& values);

}  // namespace landau
