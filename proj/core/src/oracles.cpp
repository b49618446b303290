#include "landau/oracles.hpp"

#include "landau/parallel.hpp"

#include <cmath>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace landau {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void check_nonnegative_region(const BkwSpec& spec, double t, double k) {
  const double k_min = static_cast<double>(spec.dim) / (spec.dim + 2);
  if (t < 0.0 || k < k_min * (1.0 - 1e-14)) {
    throw std::domain_error("BKW density negative: t=" + std::to_string(t) +
                            " gives K=" + std::to_string(k) + " < d/(d+2)");
  }
}

// Tensor-grid integral of g(f) over [-extent, extent]^d with the midpoint rule.
template <typename F>
double grid_integral(const BkwSpec& spec, double t, int n, double extent, F&& g) {
  if (spec.dim != 2 && spec.dim != 3)
    throw std::invalid_argument("grid quadrature supports d = 2 or 3, got " + std::to_string(spec.dim));
  if (n <= 0) n = spec.dim == 2 ? 400 : 160;
  const double h = 2.0 * extent / n;
  const double k = spec.k_of_t(t);
  check_nonnegative_region(spec, t, k);
  const int d = spec.dim;
  const double norm = std::pow(kTwoPi * k, -0.5 * d);
  const double a = ((d + 2) * k - d) / (2.0 * k);
  const double b = (1.0 - k) / (2.0 * k * k);

  // Radially symmetric integrand: tabulate per |v|^2 on the fly.
  auto value_at = [&](double r2) { return norm * std::exp(-r2 / (2.0 * k)) * (a + b * r2); };
  std::vector<double> x(n);
  for (int i = 0; i < n; ++i) x[i] = -extent + (i + 0.5) * h;

  std::vector<double> rows(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j = 0; j < n; ++j) {
      const double r2ij = x[i] * x[i] + x[j] * x[j];
      if (d == 2) {
        s += g(value_at(r2ij));
      } else {
        for (int l = 0; l < n; ++l) s += g(value_at(r2ij + x[l] * x[l]));
      }
    }
    rows[i] = s;
  }
  return pairwise_sum(rows.data(), rows.size()) * std::pow(h, d);
}

}  // namespace

void BkwSpec::validate() const {
  if (dim < 2) throw std::invalid_argument("BKW dim must be >= 2");
  if (!(bkw_b > 0.0 && bkw_b <= 1.0)) throw std::invalid_argument("BKW b must lie in (0, 1]");
  if (!(c_gamma > 0.0)) throw std::invalid_argument("BKW c_gamma must be > 0");
}

double BkwSpec::k_of_t(double t) const {
  return 1.0 - bkw_b * std::exp(-2.0 * c_gamma * (dim - 1) * t);
}

double BkwSpec::earliest_valid_time() const {
  const double ratio = bkw_b * (dim + 2) / 2.0;
  if (ratio <= 1.0) return 0.0;
  return std::log(ratio) / (2.0 * c_gamma * (dim - 1));
}

double bkw_density(const BkwSpec& spec, double t, const Eigen::Ref<const Vec>& v) {
  const double k = spec.k_of_t(t);
  check_nonnegative_region(spec, t, k);
  const int d = spec.dim;
  const double r2 = v.squaredNorm();
  const double poly = ((d + 2) * k - d) / (2.0 * k) + (1.0 - k) / (2.0 * k * k) * r2;
  return std::pow(kTwoPi * k, -0.5 * d) * std::exp(-r2 / (2.0 * k)) * std::max(poly, 0.0);
}

double bkw_log_density(const BkwSpec& spec, double t, const Eigen::Ref<const Vec>& v) {
  const double k = spec.k_of_t(t);
  check_nonnegative_region(spec, t, k);
  const int d = spec.dim;
  const double r2 = v.squaredNorm();
  const double poly = ((d + 2) * k - d) / (2.0 * k) + (1.0 - k) / (2.0 * k * k) * r2;
  return -0.5 * d * std::log(kTwoPi * k) - r2 / (2.0 * k) + std::log(std::max(poly, 0.0));
}

double bkw_smoothed_density(const BkwSpec& spec, double t, double eps, const Eigen::Ref<const Vec>& v) {
  const double k = spec.k_of_t(t);
  check_nonnegative_region(spec, t, k);
  const int d = spec.dim;
  const double s2 = k + eps * eps;
  const double r2 = v.squaredNorm();
  const double a = ((d + 2) * k - d) / (2.0 * k);
  const double b = (1.0 - k) / (2.0 * k * k);
  const double second_moment = k * k * r2 / (s2 * s2) + d * k * eps * eps / s2;
  return std::pow(kTwoPi * s2, -0.5 * d) * std::exp(-r2 / (2.0 * s2)) * (a + b * second_moment);
}

double bkw_entropy(const BkwSpec& spec, double t, int points_per_axis, double extent) {
  // f log f -> 0 as f -> 0
  return grid_integral(spec, t, points_per_axis, extent,
                       [](double f) { return f > 0.0 ? f * std::log(f) : 0.0; });
}

double bkw_mass(const BkwSpec& spec, double t, int points_per_axis, double extent) {
  return grid_integral(spec, t, points_per_axis, extent, [](double f) { return f; });
}

double maxwellian_entropy(int dim) { return -0.5 * dim * (1.0 + std::log(kTwoPi)); }

Mat covariance_exact(const Eigen::Ref<const Vec>& p0, double t) {
  const auto d = p0.size();
  const double energy = p0.sum();
  const double limit = energy / static_cast<double>(d);
  const double decay = std::exp(-4.0 * static_cast<double>(d) * t);
  Mat p = Mat::Zero(d, d);
  for (Index i = 0; i < d; ++i) p(i, i) = limit - (limit - p0(i)) * decay;
  return p;
}

Vec kde_density(const Eigen::Ref<const Mat>& particles, double eps,
                const Eigen::Ref<const Mat>& queries) {
  if (!(eps > 0.0)) throw std::invalid_argument("KDE bandwidth must be > 0");
  if (particles.rows() != queries.rows()) throw std::invalid_argument("KDE dimension mismatch");
  const auto d = particles.rows();
  const auto n = particles.cols();
  const double inv2e2 = 1.0 / (2.0 * eps * eps);
  const double norm = std::pow(kTwoPi * eps * eps, -0.5 * static_cast<double>(d)) / static_cast<double>(n);
  Vec out(queries.cols());
  const auto m = static_cast<std::size_t>(queries.cols());
  for_chunks(m, default_chunks(m), [&](std::size_t, std::size_t b, std::size_t e) {
    for (auto q = static_cast<Index>(b); q < static_cast<Index>(e); ++q) {
      double s = 0.0;
      for (Index i = 0; i < n; ++i) {
        s += std::exp(-(queries.col(q) - particles.col(i)).squaredNorm() * inv2e2);
      }
      out(q) = norm * s;
    }
  });
  return out;
}

double frobenius_error(const Eigen::Ref<const Mat>& a, const Eigen::Ref<const Mat>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("frobenius_error: shape mismatch");
  return (a - b).norm();
}

Mat slice_grid(int dim, int points_per_axis, double extent) {
  if (dim != 2 && dim != 3) throw std::invalid_argument("slice_grid supports d = 2 or 3");
  const int n = points_per_axis;
  Mat pts = Mat::Zero(dim, static_cast<Index>(n) * n);
  const double h = n > 1 ? 2.0 * extent / (n - 1) : 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      pts(0, static_cast<Index>(i) * n + j) = -extent + i * h;
      pts(1, static_cast<Index>(i) * n + j) = -extent + j * h;
    }
  return pts;
}

double relative_l2(const Eigen::Ref<const Vec>& approx, const Eigen::Ref<const Vec>& exact) {
  const double denom = exact.norm();
  if (denom == 0.0) throw std::domain_error("relative_l2: zero reference");
  return (approx - exact).norm() / denom;
}

void write_grid_csv(std::ostream& os, const Eigen::Ref<const Mat>& points,
                    const Eigen::Ref<const Vec>& values) {
  for (Index k = 0; k < points.rows(); ++k) os << 'x' << k << ',';
  os << "value\n";
  os.precision(12);
  for (Index c = 0; c < points.cols(); ++c) {
    for (Index k = 0; k < points.rows(); ++k) os << points(k, c) << ',';
    os << values(c) << '\n';
  }
}

}  // namespace landau
