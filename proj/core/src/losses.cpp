#include "landau/losses.hpp"

#include "landau/parallel.hpp"

#include <string>
#include <unordered_set>

namespace landau {
namespace {

// Per-pair scalars shared by the value and gradient loops.
struct PairScalars {
  double zw, ww, zjz;
};

inline double dot(const double* a, const double* b, Index d) {
  double s = 0.0;
  for (Index k = 0; k < d; ++k) s += a[k] * b[k];
  return s;
}

// J_i = jac.middleCols(i*d, d), column-major d x d block starting at jac.data() + i*d*d.
inline const double* jac_block(const Mat& jac, Index i, Index d) { return jac.data() + i * d * d; }

inline double trace_of(const double* j, Index d) {
  double s = 0.0;
  for (Index k = 0; k < d; ++k) s += j[k * d + k];
  return s;
}

// z^T J z and, optionally, J z and J^T z.
inline double quad_form(const double* j, const double* z, Index d, double* jz, double* jtz) {
  double s = 0.0;
  for (Index a = 0; a < d; ++a) {
    double row = 0.0;   // (J z)_a
    double col = 0.0;   // (J^T z)_a
    for (Index b = 0; b < d; ++b) {
      row += j[b * d + a] * z[b];
      col += j[a * d + b] * z[b];
    }
    if (jz) jz[a] = row;
    if (jtz) jtz[a] = col;
    s += z[a] * row;
  }
  return s;
}

double pairwise(const std::vector<double>& x) { return pairwise_sum(x.data(), x.size()); }

// Reverse sweep of kappa * sum_{i,j} [q_ij + 2 h_ij]; returns the value.
double pair_backward(const Mat& p, const Mat& u, const Mat& jac, const KernelSpec& spec, double kappa, Mat& ubar,
                     Mat& pbar, Mat& jbar) {
  const Index d = p.rows();
  const Index n = p.cols();
  const double c = spec.c_gamma;
  const double gam = spec.gamma;
  const double dm1 = static_cast<double>(d - 1);
  const auto nn = static_cast<std::size_t>(n);
  const std::size_t chunks = default_chunks(nn);

  std::vector<Mat> ub(chunks), pb(chunks);
  std::vector<double> rows(nn, 0.0);
  jbar = Mat::Zero(d, d * n);

  for_chunks(nn, chunks, [&](std::size_t ch, std::size_t b0, std::size_t b1) {
    Mat& ubc = ub[ch];
    Mat& pbc = pb[ch];
    ubc = Mat::Zero(d, n);
    pbc = Mat::Zero(d, n);
    std::vector<double> z(d), w(d), jz(d), jtz(d), dw(d), dz(d);
    Mat szz(d, d);
    for (auto ii = static_cast<Index>(b0); ii < static_cast<Index>(b1); ++ii) {
      const double* pi = p.col(ii).data();
      const double* ui = u.col(ii).data();
      const double* ji = jac_block(jac, ii, d);
      const double trj = trace_of(ji, d);
      double row = 0.0;
      double sum_rg2 = 0.0;
      szz.setZero();
      for (Index jj = 0; jj < n; ++jj) {
        const double* pj = p.col(jj).data();
        const double* uj = u.col(jj).data();
        double r2 = 0.0;
        for (Index k = 0; k < d; ++k) {
          z[k] = pi[k] - pj[k];
          w[k] = ui[k] - uj[k];
          r2 += z[k] * z[k];
        }
        detail::PairGeometry g;
        if (!detail::pair_geometry(r2, spec, g)) continue;
        const double zw = dot(z.data(), w.data(), d);
        const double ww = dot(w.data(), w.data(), d);
        const double zjz = quad_form(ji, z.data(), d, jz.data(), jtz.data());
        const double q = 0.5 * c * (g.rg2 * ww - g.rg * zw * zw);
        const double h = c * (g.rg2 * trj - g.rg * zjz) - dm1 * c * g.rg * zw;
        row += q + 2.0 * h;

        const double az = c * (0.5 * (gam + 2.0) * g.rg * ww - 0.5 * gam * g.rgm2 * zw * zw +
                               2.0 * (gam + 2.0) * g.rg * trj - 2.0 * gam * g.rgm2 * zjz -
                               2.0 * dm1 * gam * g.rgm2 * zw);
        const double aw = -c * g.rg * (zw + 2.0 * dm1);
        const double wz = -c * g.rg * (zw + 2.0 * dm1);  // coefficient of z in dq/dw - 2 dg/dw
        for (Index k = 0; k < d; ++k) {
          dz[k] = kappa * (az * z[k] + aw * w[k] - 2.0 * c * g.rg * (jz[k] + jtz[k]));
          dw[k] = kappa * (c * g.rg2 * w[k] + wz * z[k]);
          ubc(k, ii) += dw[k];
          ubc(k, jj) -= dw[k];
          pbc(k, ii) += dz[k];
          pbc(k, jj) -= dz[k];
        }
        sum_rg2 += g.rg2;
        for (Index b = 0; b < d; ++b)
          for (Index a = 0; a < d; ++a) szz(a, b) += g.rg * z[a] * z[b];
      }
      rows[static_cast<std::size_t>(ii)] = row;
      auto jb = jbar.middleCols(ii * d, d);
      jb = -2.0 * kappa * c * szz;
      jb.diagonal().array() += 2.0 * kappa * c * sum_rg2;
    }
  });

  ubar = Mat::Zero(d, n);
  pbar = Mat::Zero(d, n);
  for (std::size_t ch = 0; ch < chunks; ++ch) {
    if (ub[ch].size() == 0) continue;
    ubar += ub[ch];
    pbar += pb[ch];
  }
  return kappa * pairwise(rows);
}

// d/d(src_u) of sum_i pbar_i . v~_i
Mat tilde_backward(const Mat& src_v, std::span<const Index> sel, const Mat& pbar, double tau,
                   const KernelSpec& spec) {
  const Index d = src_v.rows();
  const Index m = src_v.cols();
  const auto nb = static_cast<Index>(sel.size());
  const double scale = tau / static_cast<double>(m);
  const double c = spec.c_gamma;
  Mat out = Mat::Zero(d, m);

  // A(y) x = C (rg2 x - rg (y.x) y)
  auto apply_sum = [&](const double* a, const double* pvec, Index other, bool a_first, double* acc) {
    const double* o = src_v.col(other).data();
    double y[64];
    std::vector<double> ybig;
    double* yp = y;
    if (d > 64) {
      ybig.resize(d);
      yp = ybig.data();
    }
    double r2 = 0.0;
    for (Index k = 0; k < d; ++k) {
      yp[k] = a_first ? a[k] - o[k] : o[k] - a[k];
      r2 += yp[k] * yp[k];
    }
    detail::PairGeometry g;
    if (!detail::pair_geometry(r2, spec, g)) return;
    const double yx = dot(yp, pvec, d);
    for (Index k = 0; k < d; ++k) acc[k] += c * (g.rg2 * pvec[k] - g.rg * yx * yp[k]);
  };

  // own term: -(tau/M) sum_j A(y_ij) pbar_i, scattered to sel_i (unique)
  const auto nbs = static_cast<std::size_t>(nb);
  for_chunks(nbs, default_chunks(nbs), [&](std::size_t, std::size_t b0, std::size_t b1) {
    std::vector<double> acc(d);
    for (auto i = static_cast<Index>(b0); i < static_cast<Index>(b1); ++i) {
      std::fill(acc.begin(), acc.end(), 0.0);
      const double* si = src_v.col(sel[i]).data();
      for (Index j = 0; j < m; ++j) apply_sum(si, pbar.col(i).data(), j, true, acc.data());
      for (Index k = 0; k < d; ++k) out(k, sel[i]) -= scale * acc[k];
    }
  });
  // partner term: +(tau/M) sum_i A(s_sel_i - s_k) pbar_i, gathered per source k
  Mat partner = Mat::Zero(d, m);
  const auto ms = static_cast<std::size_t>(m);
  for_chunks(ms, default_chunks(ms), [&](std::size_t, std::size_t b0, std::size_t b1) {
    for (auto k = static_cast<Index>(b0); k < static_cast<Index>(b1); ++k) {
      const double* sk = src_v.col(k).data();
      for (Index i = 0; i < nb; ++i) apply_sum(sk, pbar.col(i).data(), sel[i], false, partner.col(k).data());
    }
  });
  return out + scale * partner;
}

}  // namespace

void LossBatch::validate(Index n) const {
  if (indices.empty()) throw std::invalid_argument("loss batch is empty");
  if (!(tau > 0.0)) throw std::invalid_argument("loss batch tau must be > 0");
  std::unordered_set<Index> seen;
  for (Index i : indices) {
    if (i < 0 || i >= n) throw std::invalid_argument("loss batch index " + std::to_string(i) + " out of range");
    if (!seen.insert(i).second) throw std::invalid_argument("loss batch index " + std::to_string(i) + " repeated");
  }
}

Mat gather_columns(const Eigen::Ref<const Mat>& v, std::span<const Index> idx) {
  Mat out(v.rows(), static_cast<Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) out.col(static_cast<Index>(k)) = v.col(idx[k]);
  return out;
}

PairTotals pair_totals(const Eigen::Ref<const Mat>& p, const Eigen::Ref<const Mat>& u, const Mat& jac,
                       const KernelSpec& spec, bool per_row) {
  const Index d = p.rows();
  const Index n = p.cols();
  if (u.rows() != d || u.cols() != n || jac.rows() != d || jac.cols() != d * n)
    throw std::invalid_argument("pair_totals: shape mismatch");
  const double c = spec.c_gamma;
  const double dm1 = static_cast<double>(d - 1);
  const auto nn = static_cast<std::size_t>(n);
  const std::size_t chunks = default_chunks(nn);
  std::vector<double> rq(nn, 0.0), rh(nn, 0.0);
  std::vector<long> hits(chunks, 0);

  for_chunks(nn, chunks, [&](std::size_t ch, std::size_t b0, std::size_t b1) {
    std::vector<double> z(d), w(d);
    for (auto i = static_cast<Index>(b0); i < static_cast<Index>(b1); ++i) {
      const double* pi = p.col(i).data();
      const double* ui = u.col(i).data();
      const double* ji = jac_block(jac, i, d);
      const double trj = trace_of(ji, d);
      double sq = 0.0, sh = 0.0;
      for (Index j = 0; j < n; ++j) {
        const double* pj = p.col(j).data();
        const double* uj = u.col(j).data();
        double r2 = 0.0;
        for (Index k = 0; k < d; ++k) {
          z[k] = pi[k] - pj[k];
          w[k] = ui[k] - uj[k];
          r2 += z[k] * z[k];
        }
        detail::PairGeometry g;
        if (!detail::pair_geometry(r2, spec, g)) {
          if (j != i) ++hits[ch];
          continue;
        }
        const double zw = dot(z.data(), w.data(), d);
        const double ww = dot(w.data(), w.data(), d);
        const double zjz = quad_form(ji, z.data(), d, nullptr, nullptr);
        sq += 0.5 * c * (g.rg2 * ww - g.rg * zw * zw);
        sh += c * (g.rg2 * trj - g.rg * zjz) - dm1 * c * g.rg * zw;
      }
      rq[static_cast<std::size_t>(i)] = sq;
      rh[static_cast<std::size_t>(i)] = sh;
    }
  });

  PairTotals t;
  t.quadratic = pairwise(rq);
  t.logdet = pairwise(rh);
  for (long h : hits) t.guard_hits += h;
  if (per_row) t.logdet_rows = Eigen::Map<const Vec>(rh.data(), n);
  return t;
}

Mat tilde_from_values(const Eigen::Ref<const Mat>& src_v, const Eigen::Ref<const Mat>& src_u,
                      std::span<const Index> selected, double tau, const KernelSpec& spec) {
  const Index d = src_v.rows();
  const Index m = src_v.cols();
  const auto nb = static_cast<std::size_t>(selected.size());
  const double scale = tau / static_cast<double>(m);
  const double c = spec.c_gamma;
  Mat out(d, static_cast<Index>(nb));
  for_chunks(nb, default_chunks(nb), [&](std::size_t, std::size_t b0, std::size_t b1) {
    std::vector<double> y(d), w(d), acc(d);
    for (auto i = static_cast<Index>(b0); i < static_cast<Index>(b1); ++i) {
      const Index si = selected[static_cast<std::size_t>(i)];
      std::fill(acc.begin(), acc.end(), 0.0);
      for (Index j = 0; j < m; ++j) {
        double r2 = 0.0;
        for (Index k = 0; k < d; ++k) {
          y[k] = src_v(k, si) - src_v(k, j);
          w[k] = src_u(k, si) - src_u(k, j);
          r2 += y[k] * y[k];
        }
        detail::PairGeometry g;
        if (!detail::pair_geometry(r2, spec, g)) continue;
        const double yw = dot(y.data(), w.data(), d);
        for (Index k = 0; k < d; ++k) acc[k] += c * (g.rg2 * w[k] - g.rg * yw * y[k]);
      }
      for (Index k = 0; k < d; ++k) out(k, i) = src_v(k, si) - scale * acc[k];
    }
  });
  return out;
}

namespace detail {

void report_nonfinite_pair(const Eigen::Ref<const Mat>& p, const Eigen::Ref<const Mat>& u, const Mat& jac,
                           const KernelSpec& spec, std::span<const Index> ids) {
  const Index d = p.rows();
  for (Index i = 0; i < p.cols(); ++i) {
    if (!u.col(i).allFinite() || !jac.middleCols(i * d, d).allFinite())
      throw NumericalError("non-finite field value at particle " + std::to_string(ids[i]));
    for (Index j = 0; j < p.cols(); ++j) {
      const double q = pair_quadratic(p.col(i), p.col(j), u.col(i), u.col(j), spec);
      const double h = pair_logdet_rate(p.col(i), p.col(j), u.col(i), u.col(j), jac.middleCols(i * d, d), spec);
      if (!std::isfinite(q) || !std::isfinite(h))
        throw NumericalError("non-finite loss term for pair (" + std::to_string(ids[i]) + ", " +
                             std::to_string(ids[j]) + ")");
    }
  }
  throw NumericalError("non-finite loss value (overflow in the pair sum)");
}

}  // namespace detail

LossGradient loss_and_gradient(const VectorFieldNet& net, const ParticleEnsemble& ens, const LossBatch& batch,
                               const KernelSpec& spec, TildeMode mode) {
  batch.validate(ens.count());
  const Index d = ens.dim();
  const auto b = static_cast<double>(batch.indices.size());
  LossGradient out;
  out.grad = Vec::Zero(net.num_params());

  if (batch.scheme == Scheme::kScore) {
    NetTape tape;
    const Mat v = gather_columns(ens.velocities, batch.indices);
    tape.forward(net, v, true);
    const Mat& u = tape.u();
    const Mat& jac = tape.jacobian();
    double s = 0.0;
    for (Index p = 0; p < v.cols(); ++p) s += u.col(p).squaredNorm() + 2.0 * jac.middleCols(p * d, d).trace();
    out.value = s / b;
    if (!std::isfinite(out.value)) throw NumericalError("score loss: non-finite value");
    Mat jbar = Mat::Zero(d, d * v.cols());
    for (Index p = 0; p < v.cols(); ++p) jbar.middleCols(p * d, d).diagonal().setConstant(2.0 / b);
    tape.backward((2.0 / b) * u, &jbar, out.grad, nullptr);
  } else {
    const double kappa = batch.tau * batch.tau / (b * b);
    NetTape source_tape;
    Mat src_v;
    std::vector<Index> sel;
    Mat pos;
    if (batch.scheme == Scheme::kImplicit) {
      if (mode == TildeMode::kFull) {
        src_v = ens.velocities;
        sel = batch.indices;
      } else {
        src_v = gather_columns(ens.velocities, batch.indices);
        sel.resize(batch.indices.size());
        for (std::size_t k = 0; k < sel.size(); ++k) sel[k] = static_cast<Index>(k);
      }
      source_tape.forward(net, src_v, false);
      pos = tilde_from_values(src_v, source_tape.u(), sel, batch.tau, spec);
    } else {
      pos = gather_columns(ens.velocities, batch.indices);
    }

    NetTape tape;
    tape.forward(net, pos, true);
    Mat ubar, pbar, jbar;
    out.value = pair_backward(pos, tape.u(), tape.jacobian(), spec, kappa, ubar, pbar, jbar);
    if (!std::isfinite(out.value))
      detail::report_nonfinite_pair(pos, tape.u(), tape.jacobian(), spec, batch.indices);

    if (batch.scheme == Scheme::kImplicit) {
      Mat xbar;
      tape.backward(ubar, &jbar, out.grad, &xbar);
      pbar += xbar;
      const Mat u0bar = tilde_backward(src_v, sel, pbar, batch.tau, spec);
      source_tape.backward(u0bar, nullptr, out.grad, nullptr);
    } else {
      tape.backward(ubar, &jbar, out.grad, nullptr);
    }
  }

  if (!out.grad.allFinite()) {
    Index slot = 0;
    while (slot < out.grad.size() && std::isfinite(out.grad(slot))) ++slot;
    throw NumericalError("non-finite gradient at parameter slot " + std::to_string(slot));
  }
  return out;
}

}  // namespace landau
