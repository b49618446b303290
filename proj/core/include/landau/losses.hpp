#pragma once

#include "landau/ensemble.hpp"
#include "landau/kernels.hpp"
#include "landau/net.hpp"
#include "landau/types.hpp"

#include <cmath>
#include <concepts>
#include <span>
#include <vector>

namespace landau {

/// Anything that maps a d x B block of inputs to outputs U (d x B) and, on
/// request, particle-major Jacobians (d x d*B). VectorFieldNet is one.
template <typename F>
concept Field = requires(const F& f, const Eigen::Ref<const Mat>& x, Mat& u, Mat* j) {
  { f.dim() } -> std::convertible_to<int>;
  f.evaluate(x, u, j);
};

/// u(v) + a + b v. Elements of span{1, v} are invisible to the JKO losses.
template <Field F>
struct AffineShifted {
  const F& base;
  Vec a;
  double b = 0.0;

  int dim() const { return base.dim(); }
  void evaluate(const Eigen::Ref<const Mat>& x, Mat& u, Mat* jac) const {
    base.evaluate(x, u, jac);
    u += b * x;
    u.colwise() += a;
    if (jac)
      for (Index p = 0; p < x.cols(); ++p) jac->middleCols(p * x.rows(), x.rows()).diagonal().array() += b;
  }
};

/// Where the j-sum inside v~ runs: over the training batch (1/B) or over
/// all particles (1/N).
enum class TildeMode { kBatch, kFull };

struct LossBatch {
  std::vector<Index> indices;
  Scheme scheme = Scheme::kImplicit;
  double tau = 0.01;

  /// Throws std::invalid_argument for empty, duplicate or out-of-range indices.
  void validate(Index n) const;
};

/// Pairwise sums over all ordered pairs (i, j) of the columns of p:
///   quadratic = sum 1/2 w^T A(z) w,  logdet = sum A(z):J_i - (d-1) C |z|^g z.w
/// with z = p_i - p_j, w = u_i - u_j. Pairs inside the guard contribute 0
/// and, for i != j, are counted in guard_hits.
struct PairTotals {
  double quadratic = 0.0;
  double logdet = 0.0;
  long guard_hits = 0;
  Vec logdet_rows;  // sum_j h_ij per i, filled when requested
};

PairTotals pair_totals(const Eigen::Ref<const Mat>& p, const Eigen::Ref<const Mat>& u, const Mat& jac,
                       const KernelSpec& spec, bool per_row);

/// Columns of v listed in idx.
Mat gather_columns(const Eigen::Ref<const Mat>& v, std::span<const Index> idx);

/// v~_i = s_i - (tau/M) sum_j A(s_i - s_j)(u_i - u_j) for the selected
/// source columns i, with j over all M source columns.
Mat tilde_from_values(const Eigen::Ref<const Mat>& src_v, const Eigen::Ref<const Mat>& src_u,
                      std::span<const Index> selected, double tau, const KernelSpec& spec);

template <Field F>
Mat tilde_positions(const F& field, const ParticleEnsemble& ens, std::span<const Index> idx, double tau,
                    const KernelSpec& spec, TildeMode mode = TildeMode::kBatch) {
  Mat u;
  if (mode == TildeMode::kFull) {
    field.evaluate(ens.velocities, u, nullptr);
    return tilde_from_values(ens.velocities, u, idx, tau, spec);
  }
  const Mat v = gather_columns(ens.velocities, idx);
  field.evaluate(v, u, nullptr);
  std::vector<Index> all(idx.size());
  for (std::size_t k = 0; k < all.size(); ++k) all[k] = static_cast<Index>(k);
  return tilde_from_values(v, u, all, tau, spec);
}

/// (tau^2/B^2) sum_{i,j in C} [d2_ij + 2 h_ij], evaluated at v~ (implicit)
/// or at v (explicit). Throws NumericalError naming the first non-finite pair.
template <Field F>
double jko_loss(const F& field, const ParticleEnsemble& ens, const LossBatch& batch, const KernelSpec& spec,
                TildeMode mode = TildeMode::kBatch);

/// (1/B) sum_i |u(v_i)|^2 + 2 tr grad u(v_i).
template <Field F>
double score_loss(const F& field, const ParticleEnsemble& ens, std::span<const Index> idx);

/// Dispatches on batch.scheme.
template <Field F>
double batch_loss(const F& field, const ParticleEnsemble& ens, const LossBatch& batch, const KernelSpec& spec,
                  TildeMode mode = TildeMode::kBatch) {
  if (batch.scheme == Scheme::kScore) return score_loss(field, ens, batch.indices);
  return jko_loss(field, ens, batch, spec, mode);
}

struct LossGradient {
  double value = 0.0;
  Vec grad;
};

/// Loss value and its exact gradient with respect to the flat parameters,
/// including the dependence of v~ on theta.
LossGradient loss_and_gradient(const VectorFieldNet& net, const ParticleEnsemble& ens, const LossBatch& batch,
                               const KernelSpec& spec, TildeMode mode = TildeMode::kBatch);

namespace detail {
/// Scans for the first pair with a non-finite term and throws NumericalError.
[[noreturn]] void report_nonfinite_pair(const Eigen::Ref<const Mat>& p, const Eigen::Ref<const Mat>& u,
                                        const Mat& jac, const KernelSpec& spec, std::span<const Index> ids);
}  // namespace detail

template <Field F>
double jko_loss(const F& field, const ParticleEnsemble& ens, const LossBatch& batch, const KernelSpec& spec,
                TildeMode mode) {
  if (batch.scheme == Scheme::kScore) throw std::invalid_argument("jko_loss: score scheme has its own loss");
  batch.validate(ens.count());
  const Mat pos = batch.scheme == Scheme::kImplicit
                      ? tilde_positions(field, ens, batch.indices, batch.tau, spec, mode)
                      : gather_columns(ens.velocities, batch.indices);
  Mat u, jac;
  field.evaluate(pos, u, &jac);
  const PairTotals t = pair_totals(pos, u, jac, spec, false);
  const double b = static_cast<double>(batch.indices.size());
  const double value = batch.tau * batch.tau / (b * b) * (t.quadratic + 2.0 * t.logdet);
  if (!std::isfinite(value)) detail::report_nonfinite_pair(pos, u, jac, spec, batch.indices);
  return value;
}

template <Field F>
double score_loss(const F& field, const ParticleEnsemble& ens, std::span<const Index> idx) {
  LossBatch check{{idx.begin(), idx.end()}, Scheme::kScore, 1.0};
  check.validate(ens.count());
  const Mat v = gather_columns(ens.velocities, idx);
  Mat u, jac;
  field.evaluate(v, u, &jac);
  const Index d = v.rows();
  double s = 0.0;
  for (Index p = 0; p < v.cols(); ++p) s += u.col(p).squaredNorm() + 2.0 * jac.middleCols(p * d, d).trace();
  const double value = s / static_cast<double>(v.cols());
  if (!std::isfinite(value)) throw NumericalError("score loss: non-finite value");
  return value;
}

}  // namespace landau
