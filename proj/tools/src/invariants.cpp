#include "landau/cli/invariants.hpp"

#include "landau/dynamics.hpp"
#include "landau/losses.hpp"
#include "landau/optim.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

namespace landau::cli {
namespace {

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

// Standard normal parameters (biases included), scaled.
VectorFieldNet noisy_net(int d, std::uint64_t seed, double scale) {
  VectorFieldNet net(d);
  Pcg32 rng(seed, streams::kNetInit);
  std::normal_distribution<double> normal(0.0, scale);
  Vec theta(net.num_params());
  for (Index k = 0; k < theta.size(); ++k) theta(k) = normal(rng);
  net.set_params(theta);
  return net;
}

ParticleEnsemble gaussian_ensemble(int d, Index n, std::uint64_t seed) {
  return sample_initial(AnisotropicGaussian{Vec::Ones(d)}, n, seed);
}

std::vector<Index> all_indices(Index n) {
  std::vector<Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Index{0});
  return idx;
}

double fd_error(const VectorFieldNet& net, const ParticleEnsemble& ens, const LossBatch& batch, const KernelSpec& spec) {
  const LossGradient lg = loss_and_gradient(net, ens, batch, spec);
  const double h = 1e-5;
  Vec fd(net.num_params());
  VectorFieldNet probe = net;
  for (Index k = 0; k < net.num_params(); ++k) {
    Vec t = net.params();
    t(k) += h;
    probe.set_params(t);
    const double up = batch_loss(probe, ens, batch, spec);
    t(k) -= 2 * h;
    probe.set_params(t);
    fd(k) = (up - batch_loss(probe, ens, batch, spec)) / (2 * h);
  }
  const double floor = 1e-3 * fd.cwiseAbs().maxCoeff();
  double worst = 0.0;
  for (Index k = 0; k < fd.size(); ++k)
    worst = std::max(worst, std::abs(lg.grad(k) - fd(k)) / std::max(std::abs(fd(k)), floor));
  return worst;
}

}  // namespace

CheckResult check_gradients(std::uint64_t seed, double tolerance) {
  CheckResult r{"gradient vs central differences", false, 0.0, tolerance, {}};
  const auto ens = gaussian_ensemble(2, 8, seed);
  const auto net = noisy_net(2, derive_seed(seed, 1), 0.4);
  for (double gamma : {0.0, -3.0}) {
    const KernelSpec spec = KernelSpec::with_default_guard(2, gamma, 0.7);
    for (Scheme s : {Scheme::kImplicit, Scheme::kExplicit, Scheme::kScore}) {
      const double e = fd_error(net, ens, LossBatch{all_indices(8), s, 0.3}, spec);
      r.detail += std::string(r.detail.empty() ? "" : " ") + std::string(to_string(s)) +
                  fmt("(g=%g)=%.2e", gamma, e);
      r.measured = std::max(r.measured, e);
    }
  }
  r.pass = r.measured <= tolerance;
  return r;
}

CheckResult check_null_space(std::uint64_t seed, int draws, double tolerance) {
  CheckResult r{"null-space invariance", false, 0.0, tolerance, {}};
  const auto ens = gaussian_ensemble(2, 32, seed);
  const auto net = noisy_net(2, derive_seed(seed, 1), 0.4);
  const KernelSpec spec = KernelSpec::with_default_guard(2, 0.0, 1.0 / 16.0);
  Pcg32 rng(derive_seed(seed, 2), streams::kHarness);
  std::normal_distribution<double> normal;
  for (Scheme s : {Scheme::kImplicit, Scheme::kExplicit}) {
    const LossBatch lb{all_indices(32), s, 0.1};
    const double base = jko_loss(net, ens, lb, spec);
    for (int k = 0; k < draws; ++k) {
      Vec a(2);
      a << normal(rng), normal(rng);
      const AffineShifted<VectorFieldNet> shifted{net, a, normal(rng)};
      r.measured = std::max(r.measured, std::abs(jko_loss(shifted, ens, lb, spec) - base) / std::abs(base));
    }
  }
  r.detail = fmt("%g draws x 2 schemes", draws);
  r.pass = r.measured <= tolerance;
  return r;
}

CheckResult check_momentum(std::uint64_t seed, double tolerance) {
  CheckResult r{"momentum conservation", false, 0.0, tolerance, {}};
  const auto ens = gaussian_ensemble(2, 1024, seed);
  const auto net = noisy_net(2, derive_seed(seed, 1), 0.4);
  const KernelSpec spec = KernelSpec::with_default_guard(2, -3.0, 1.0 / 16.0);
  const Vec before = ens.velocities.rowwise().mean();
  const UpdateResult full = full_update(net, ens, spec, 0.1, Scheme::kImplicit);
  Pcg32 rng(derive_seed(seed, 2), streams::kParticleBatching);
  const UpdateResult rbm = rbm_update(net, ens, spec, 0.1, Scheme::kImplicit, 32, rng);
  const double df = (full.ensemble.velocities.rowwise().mean() - before).cwiseAbs().maxCoeff();
  const double dr = (rbm.ensemble.velocities.rowwise().mean() - before).cwiseAbs().maxCoeff();
  const double moved = (full.ensemble.velocities - ens.velocities).cwiseAbs().maxCoeff();
  r.measured = std::max(df, dr);
  r.detail = fmt("full %.2e, rbm %.2e, max particle move %.2e", df, dr, moved);
  r.pass = r.measured <= tolerance && moved > 0.0;
  return r;
}

CheckResult check_rbm_unbiased(std::uint64_t seed, int reps, double z_limit) {
  CheckResult r{"random-batch unbiasedness", false, 0.0, z_limit, {}};
  const Index n = 256, b = 32;
  const auto ens = gaussian_ensemble(2, n, seed);
  const auto net = noisy_net(2, derive_seed(seed, 1), 0.4);
  const KernelSpec spec = KernelSpec::with_default_guard(2, 0.0, 1.0);
  const double tau = 0.1;
  const Mat full = full_update(net, ens, spec, tau, Scheme::kExplicit).ensemble.velocities - ens.velocities;

  auto stats = [&](RbmNormalization norm, std::uint64_t s, Mat& mean, Mat& se) {
    Pcg32 rng(s, streams::kParticleBatching);
    Mat sum = Mat::Zero(2, n), sq = Mat::Zero(2, n);
    for (int k = 0; k < reps; ++k) {
      const Mat dv = rbm_update(net, ens, spec, tau, Scheme::kExplicit, b, rng, norm).ensemble.velocities -
                     ens.velocities;
      sum += dv;
      sq += dv.cwiseProduct(dv);
    }
    mean = sum / reps;
    const Mat var = (sq / reps - mean.cwiseProduct(mean)) * (static_cast<double>(reps) / (reps - 1));
    se = (var / reps).cwiseSqrt();
  };

  Mat mean, se;
  stats(RbmNormalization::kUnbiased, derive_seed(seed, 3), mean, se);
  const Mat z = (mean - full).cwiseQuotient(se);
  r.measured = z.col(0).cwiseAbs().maxCoeff();
  const double beyond = static_cast<double>((z.array().abs() > z_limit).count()) / static_cast<double>(z.size());

  Mat pmean, pse;
  stats(RbmNormalization::kInverseBatch, derive_seed(seed, 4), pmean, pse);
  const Mat pz = (pmean - full).cwiseQuotient(pse);
  const double ratio = pmean.cwiseProduct(full).sum() / full.squaredNorm();

  r.detail = fmt("all components: max|z| %.2f, beyond 3SE %.4f (normal 0.0027);", z.cwiseAbs().maxCoeff(), beyond) +
             fmt(" 1/B' weighting: probe max|z| %.1f, mean/full %.4f", pz.col(0).cwiseAbs().maxCoeff(), ratio);
  r.pass = r.measured <= z_limit;
  return r;
}

std::vector<CheckResult> check_sgd_rr(std::uint64_t seed) {
  const auto p = SyntheticDoubleSum::make(8, 0.5, 2.0, 1.0);
  const std::vector<double> alphas{0.025, 0.05};
  const std::vector<int> k_floor{4000};
  const auto floor = convergence_harness(p, alphas, k_floor, 0.0, 2, [](double a) { return static_cast<int>(20 / a); },
                                         seed);
  CheckResult f{"SGD-RR floor ratio (alpha doubled)", false, floor[1].avg_sq_grad / floor[0].avg_sq_grad, 4.0, {}};
  f.detail = fmt("floor(0.025) %.3e, floor(0.05) %.3e, accepted [2, 8]", floor[0].avg_sq_grad, floor[1].avg_sq_grad);
  f.pass = f.measured >= 2.0 && f.measured <= 8.0;

  const std::vector<double> a1{0.05};
  const std::vector<int> ks{100, 200, 400};
  const auto pre = convergence_harness(p, a1, ks, 10.0, 2, {}, derive_seed(seed, 1));
  const double slope = (std::log(pre[2].avg_sq_grad) - std::log(pre[0].avg_sq_grad)) / std::log(4.0);
  CheckResult s{"SGD-RR pre-floor slope in K", false, slope, -1.0, {}};
  s.detail = fmt("avg |grad|^2 at K=100,200,400: %.3e %.3e %.3e", pre[0].avg_sq_grad, pre[1].avg_sq_grad,
                 pre[2].avg_sq_grad) +
             fmt("; floor at alpha 0.05 %.3e; accepted [-1.25, -0.75]", floor[1].avg_sq_grad);
  s.pass = slope >= -1.25 && slope <= -0.75 && pre[2].avg_sq_grad > 10.0 * floor[1].avg_sq_grad;
  return {f, s};
}

}  // namespace landau::cli
