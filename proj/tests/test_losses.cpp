#include "landau/losses.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <limits>
#include <numeric>

using namespace landau;

namespace {

std::vector<Index> iota_indices(Index n) {
  std::vector<Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Index{0});
  return idx;
}

// Independent double loop over single-point net calls and the scalar kernel helpers.
double brute_jko(const VectorFieldNet& net, const Mat& v, double tau, const KernelSpec& spec, bool implicit) {
  const Index n = v.cols();
  Mat u0(v.rows(), n);
  for (Index i = 0; i < n; ++i) u0.col(i) = net.forward(v.col(i));
  Mat p = v;
  if (implicit) {
    for (Index i = 0; i < n; ++i) {
      Vec s = Vec::Zero(v.rows());
      for (Index j = 0; j < n; ++j) s += test::brute_a(v.col(i) - v.col(j), spec.gamma, spec.c_gamma) * (u0.col(i) - u0.col(j));
      p.col(i) = v.col(i) - tau / static_cast<double>(n) * s;
    }
  }
  double total = 0.0;
  for (Index i = 0; i < n; ++i) {
    const Vec ui = net.forward(p.col(i));
    const Mat ji = net.input_jacobian(p.col(i));
    for (Index j = 0; j < n; ++j) {
      const Vec uj = net.forward(p.col(j));
      total += pair_quadratic(p.col(i), p.col(j), ui, uj, spec) +
               2.0 * pair_logdet_rate(p.col(i), p.col(j), ui, uj, ji, spec);
    }
  }
  return tau * tau / static_cast<double>(n * n) * total;
}

struct IdentityField {
  int d;
  int dim() const { return d; }
  void evaluate(const Eigen::Ref<const Mat>& x, Mat& u, Mat* jac) const {
    u = x;
    if (jac) {
      jac->setZero(d, d * x.cols());
      for (Index p = 0; p < x.cols(); ++p) jac->middleCols(p * d, d).setIdentity();
    }
  }
};

struct ZeroField {
  int d;
  int dim() const { return d; }
  void evaluate(const Eigen::Ref<const Mat>& x, Mat& u, Mat* jac) const {
    u.setZero(d, x.cols());
    if (jac) jac->setZero(d, d * x.cols());
  }
};

// max_k |g_k - fd_k| / max(|fd_k|, 1e-3 max|fd|)
double fd_relative_error(const VectorFieldNet& net, const ParticleEnsemble& ens, const LossBatch& batch,
                         const KernelSpec& spec, TildeMode mode) {
  const LossGradient lg = loss_and_gradient(net, ens, batch, spec, mode);
  const double h = 1e-5;
  Vec fd(net.num_params());
  for (Index k = 0; k < net.num_params(); ++k) {
    VectorFieldNet plus = net, minus = net;
    Vec t = net.params();
    t(k) += h;
    plus.set_params(t);
    t(k) -= 2 * h;
    minus.set_params(t);
    fd(k) = (batch_loss(plus, ens, batch, spec, mode) - batch_loss(minus, ens, batch, spec, mode)) / (2 * h);
  }
  const double floor = 1e-3 * fd.cwiseAbs().maxCoeff();
  double worst = 0.0;
  for (Index k = 0; k < fd.size(); ++k)
    worst = std::max(worst, std::abs(lg.grad(k) - fd(k)) / std::max(std::abs(fd(k)), floor));
  return worst;
}

}  // namespace

TEST(Tilde, HandExample) {
  const KernelSpec spec{2, 0.0, 1.0, 0.0};
  Mat v(2, 2);
  v << 0, 1, 0, 0;
  Mat u = Mat::Zero(2, 2);
  std::vector<Index> sel{0, 1};
  EXPECT_EQ(tilde_from_values(v, u, sel, 0.1, spec), v);
  u(1, 1) = 1.0;
  const double tau = 0.1;
  const Mat t = tilde_from_values(v, u, sel, tau, spec);
  EXPECT_NEAR(t(0, 0), 0.0, 1e-15);
  EXPECT_NEAR(t(1, 0), tau / 2, 1e-15);
  EXPECT_NEAR(t(0, 1), 1.0, 1e-15);
  EXPECT_NEAR(t(1, 1), -tau / 2, 1e-15);
}

TEST(Tilde, ZeroFieldAndSmallTau) {
  const auto ens = test::random_ensemble(2, 10, 3);
  const KernelSpec spec{2, 0.0, 1.0, 0.0};
  const auto idx = iota_indices(10);
  EXPECT_EQ(tilde_positions(ZeroField{2}, ens, idx, 0.5, spec), ens.velocities);
  const auto net = test::random_net(2, 4);
  EXPECT_LE((tilde_positions(net, ens, idx, 1e-14, spec) - ens.velocities).norm(), 1e-12);
}

TEST(JkoLoss, ZeroFieldGivesZero) {
  const auto ens = test::random_ensemble(3, 12, 5);
  const KernelSpec spec{3, -3.0, 0.1, 1e-10};
  for (Scheme s : {Scheme::kImplicit, Scheme::kExplicit})
    EXPECT_EQ(jko_loss(ZeroField{3}, ens, LossBatch{iota_indices(12), s, 0.1}, spec), 0.0);
}

TEST(JkoLoss, MatchesBruteForce) {
  for (double gamma : {0.0, -3.0}) {
    const auto ens = test::random_ensemble(2, 4, 7);
    const KernelSpec spec = KernelSpec::with_default_guard(2, gamma, 0.8);
    const auto net = test::random_net(2, 8);
    for (bool implicit : {true, false}) {
      const LossBatch batch{iota_indices(4), implicit ? Scheme::kImplicit : Scheme::kExplicit, 0.3};
      const double ref = brute_jko(net, ens.velocities, 0.3, spec, implicit);
      EXPECT_NEAR(jko_loss(net, ens, batch, spec), ref, 1e-12 * std::max(1.0, std::abs(ref)));
      EXPECT_NEAR(loss_and_gradient(net, ens, batch, spec).value, ref, 1e-12 * std::max(1.0, std::abs(ref)));
    }
  }
}

TEST(JkoLoss, FullBatchEqualsDoubleSumOnSubset) {
  // batch C = {1, 3, 4}: loss equals the full-N definition on that sub-ensemble
  const auto ens = test::random_ensemble(2, 6, 9);
  const KernelSpec spec{2, 0.0, 1.0, 0.0};
  const auto net = test::random_net(2, 10);
  const std::vector<Index> c{1, 3, 4};
  ParticleEnsemble sub;
  sub.velocities = gather_columns(ens.velocities, c);
  sub.log_density = Vec::Zero(3);
  const LossBatch lb{c, Scheme::kImplicit, 0.2};
  EXPECT_NEAR(jko_loss(net, ens, lb, spec), brute_jko(net, sub.velocities, 0.2, spec, true), 1e-13);
}

TEST(JkoLoss, AffineShiftInvariance) {
  const auto ens = test::random_ensemble(2, 16, 11);
  const KernelSpec spec{2, 0.0, 1.0 / 16, 0.0};
  const auto net = test::random_net(2, 12);
  Pcg32 rng(13, 0);
  std::normal_distribution<double> normal;
  for (Scheme s : {Scheme::kImplicit, Scheme::kExplicit}) {
    const LossBatch lb{iota_indices(16), s, 0.1};
    const double base = jko_loss(net, ens, lb, spec);
    for (int draw = 0; draw < 20; ++draw) {
      AffineShifted<VectorFieldNet> shifted{net, Eigen::Vector2d(normal(rng), normal(rng)), normal(rng)};
      EXPECT_NEAR(jko_loss(shifted, ens, lb, spec), base, 1e-10 * std::abs(base));
    }
  }
}

TEST(JkoLoss, NonFiniteFieldIsReported) {
  const auto ens = test::random_ensemble(2, 5, 15);
  auto net = test::random_net(2, 16);
  Vec t = net.params();
  t(net.bias_offset(3)) = std::numeric_limits<double>::infinity();
  net.set_params(t);
  try {
    jko_loss(net, ens, LossBatch{iota_indices(5), Scheme::kExplicit, 0.1}, KernelSpec{2, 0.0, 1.0, 0.0});
    FAIL();
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("particle"), std::string::npos);
  }
}

TEST(ScoreLoss, ProbeFieldsAndBruteForce) {
  const auto ens = test::random_ensemble(3, 16, 17);
  const auto idx = iota_indices(16);
  EXPECT_EQ(score_loss(ZeroField{3}, ens, idx), 0.0);
  const double expect = ens.velocities.colwise().squaredNorm().mean() + 6.0;
  EXPECT_NEAR(score_loss(IdentityField{3}, ens, idx), expect, 1e-12);

  const auto net = test::random_net(3, 18);
  double ref = 0.0;
  for (Index i = 0; i < 16; ++i)
    ref += net.forward(ens.velocities.col(i)).squaredNorm() + 2.0 * net.input_jacobian(ens.velocities.col(i)).trace();
  ref /= 16.0;
  EXPECT_NEAR(score_loss(net, ens, idx), ref, 1e-12 * std::max(1.0, std::abs(ref)));
}

TEST(LossBatch, Validation) {
  EXPECT_THROW((LossBatch{{}, Scheme::kImplicit, 0.1}.validate(4)), std::invalid_argument);
  EXPECT_THROW((LossBatch{{0, 0}, Scheme::kImplicit, 0.1}.validate(4)), std::invalid_argument);
  EXPECT_THROW((LossBatch{{4}, Scheme::kImplicit, 0.1}.validate(4)), std::invalid_argument);
  EXPECT_THROW((LossBatch{{0}, Scheme::kImplicit, -1.0}.validate(4)), std::invalid_argument);
}

TEST(LossGradient, MatchesFiniteDifferencesAllSchemes) {
  for (double gamma : {0.0, -3.0, -1.0}) {
    const auto ens = test::random_ensemble(2, 8, 19);
    const KernelSpec spec = KernelSpec::with_default_guard(2, gamma, 0.7);
    const auto net = test::random_net(2, 20);
    for (Scheme s : {Scheme::kImplicit, Scheme::kExplicit, Scheme::kScore}) {
      const LossBatch lb{iota_indices(8), s, 0.3};
      EXPECT_LE(fd_relative_error(net, ens, lb, spec, TildeMode::kBatch), 1e-5)
          << "gamma=" << gamma << " scheme=" << to_string(s);
    }
  }
}

TEST(LossGradient, FullTildeModeAndSubBatch) {
  const auto ens = test::random_ensemble(3, 9, 23);
  const KernelSpec spec{3, 0.0, 1.0, 0.0};
  const auto net = test::random_net(3, 24);
  const LossBatch lb{{7, 2, 5, 0}, Scheme::kImplicit, 0.4};
  EXPECT_LE(fd_relative_error(net, ens, lb, spec, TildeMode::kFull), 1e-5);
  EXPECT_LE(fd_relative_error(net, ens, lb, spec, TildeMode::kBatch), 1e-5);
}

TEST(LossGradient, ConstantLossHasZeroGradient) {
  const auto ens = test::random_ensemble(2, 6, 25);
  const LossGradient lg =
      loss_and_gradient(VectorFieldNet(2), ens, LossBatch{iota_indices(6), Scheme::kImplicit, 0.1}, KernelSpec{2, 0.0, 1.0, 0.0});
  EXPECT_EQ(lg.value, 0.0);
}

TEST(JkoLoss, BatchMeanMatchesRescaledFullValue) {
  // E over uniform batches of (tau^2/B^2) sum_{C} = (B-1)N / (B(N-1)) x full value
  const Index n = 24, b = 6;
  const auto ens = test::random_ensemble(2, n, 27);
  const KernelSpec spec{2, 0.0, 1.0, 0.0};
  const auto net = test::random_net(2, 28);
  const double full = jko_loss(net, ens, LossBatch{iota_indices(n), Scheme::kExplicit, 0.1}, spec);
  Pcg32 rng(29, 3);
  const int draws = 4000;
  double s = 0.0, s2 = 0.0;
  std::vector<Index> perm = iota_indices(n);
  for (int k = 0; k < draws; ++k) {
    std::shuffle(perm.begin(), perm.end(), rng);
    const double x = jko_loss(net, ens, LossBatch{{perm.begin(), perm.begin() + b}, Scheme::kExplicit, 0.1}, spec);
    s += x;
    s2 += x * x;
  }
  const double mean = s / draws;
  const double se = std::sqrt((s2 / draws - mean * mean) / draws);
  const double factor = static_cast<double>((b - 1) * n) / static_cast<double>(b * (n - 1));
  EXPECT_LE(std::abs(mean * (1.0 / factor) - full), 3.0 * se / factor);
}
