#include "landau/kernels.hpp"

#include <stdexcept>
#include <string>

namespace landau {

KernelSpec KernelSpec::with_default_guard(int dim, double gamma, double c_gamma) {
  KernelSpec spec{dim, gamma, c_gamma, gamma < -2.0 ? 1e-10 : 0.0};
  spec.validate();
  return spec;
}

void KernelSpec::validate() const {
  if (dim < 2) throw std::invalid_argument("kernel dim must be >= 2, got " + std::to_string(dim));
  if (!(c_gamma > 0.0) || !std::isfinite(c_gamma))
    throw std::invalid_argument("kernel c_gamma must be > 0");
  if (!(gamma >= -dim - 1.0) || !(gamma <= 1.0))
    throw std::invalid_argument("kernel gamma must lie in [-dim-1, 1], got " + std::to_string(gamma));
  if (!(min_dist >= 0.0)) throw std::invalid_argument("kernel min_dist must be >= 0");
}

Mat projection(const Eigen::Ref<const Vec>& z) {
  const double r2 = z.squaredNorm();
  if (r2 == 0.0) throw std::domain_error("undefined projection: zero vector");
  return Mat::Identity(z.size(), z.size()) - z * z.transpose() / r2;
}

Mat collision_matrix(const Eigen::Ref<const Vec>& z, const KernelSpec& spec) {
  detail::PairGeometry g;
  if (!detail::pair_geometry(z.squaredNorm(), spec, g)) return Mat::Zero(z.size(), z.size());
  return spec.c_gamma * (g.rg2 * Mat::Identity(z.size(), z.size()) - g.rg * z * z.transpose());
}

double pair_quadratic(const Eigen::Ref<const Vec>& v_i, const Eigen::Ref<const Vec>& v_j,
                      const Eigen::Ref<const Vec>& u_i, const Eigen::Ref<const Vec>& u_j,
                      const KernelSpec& spec) {
  const Vec z = v_i - v_j;
  detail::PairGeometry g;
  if (!detail::pair_geometry(z.squaredNorm(), spec, g)) return 0.0;
  const Vec w = u_i - u_j;
  const double zw = z.dot(w);
  // |w|^2 |z|^2 - (z.w)^2 >= 0 (Cauchy-Schwarz); clamp the rounding residue
  const double q = 0.5 * spec.c_gamma * (g.rg2 * w.squaredNorm() - g.rg * zw * zw);
  return q > 0.0 ? q : 0.0;
}

double pair_logdet_rate(const Eigen::Ref<const Vec>& v_i, const Eigen::Ref<const Vec>& v_j,
                        const Eigen::Ref<const Vec>& u_i, const Eigen::Ref<const Vec>& u_j,
                        const Eigen::Ref<const Mat>& grad_u_i, const KernelSpec& spec) {
  const Vec z = v_i - v_j;
  detail::PairGeometry g;
  if (!detail::pair_geometry(z.squaredNorm(), spec, g)) return 0.0;
  const double a_dot_j = spec.c_gamma * (g.rg2 * grad_u_i.trace() - g.rg * z.dot(grad_u_i * z));
  const double drift = (spec.dim - 1) * spec.c_gamma * g.rg * z.dot(u_i - u_j);
  return a_dot_j - drift;
}

}  // namespace landau
