#include "landau/dynamics.hpp"

#include "support.hpp"

#include "landau/parallel.hpp"

#include <gtest/gtest.h>

#include <fstream>

using namespace landau;

namespace {

// Identity-activation net realizing u(v) = (0, v_0) in 2D.
VectorFieldNet shear_probe() {
  VectorFieldNet net(2);
  net.set_activation(VectorFieldNet::Activation::kIdentity);
  Vec t = Vec::Zero(net.num_params());
  auto w = [&](int l) { return Eigen::Map<Mat>(t.data() + net.weight_offset(l), l == 3 ? 2 : 32, l == 0 ? 2 : 32); };
  w(0)(0, 0) = 1.0;
  w(1)(0, 0) = 1.0;
  w(2)(0, 0) = 1.0;
  w(3)(1, 0) = 1.0;
  net.set_params(t);
  return net;
}

// Constant output: only b4 nonzero.
VectorFieldNet constant_net(int d) {
  VectorFieldNet net(d);
  Vec t = Vec::Zero(net.num_params());
  t.segment(net.bias_offset(3), d).setLinSpaced(d, -1.0, 2.0);
  net.set_params(t);
  return net;
}

RunConfig small_config(Scheme s) {
  RunConfig cfg;
  cfg.kernel = KernelSpec{2, 0.0, 1.0 / 16, 0.0};
  cfg.initial = BkwInitial{BkwSpec{2, 0.5, 1.0 / 16}};
  cfg.n_particles = 64;
  cfg.tau = 0.05;
  cfg.n_steps = 2;
  cfg.scheme = s;
  cfg.first_train = TrainConfig{32, 20, 2e-3};
  cfg.later_train = TrainConfig{32, 5, 5e-4};
  cfg.seed = 77;
  return cfg;
}

}  // namespace

TEST(FullUpdate, HandExample) {
  const auto net = shear_probe();
  EXPECT_LE((net.forward(Eigen::Vector2d(1, 0)) - Eigen::Vector2d(0, 1)).norm(), 1e-15);
  ParticleEnsemble ens;
  ens.velocities.resize(2, 2);
  ens.velocities << 0, 1, 0, 0;
  ens.log_density = Vec::Zero(2);
  const double tau = 0.2;
  const auto r = full_update(net, ens, KernelSpec{2, 0.0, 1.0, 0.0}, tau, Scheme::kExplicit);
  EXPECT_NEAR(r.ensemble.velocities(0, 0), 0.0, 1e-15);
  EXPECT_NEAR(r.ensemble.velocities(1, 0), tau / 2, 1e-15);
  EXPECT_NEAR(r.ensemble.velocities(0, 1), 1.0, 1e-15);
  EXPECT_NEAR(r.ensemble.velocities(1, 1), -tau / 2, 1e-15);
  EXPECT_NEAR(r.ensemble.time, tau, 0.0);
}

TEST(FullUpdate, ConstantFieldChangesNothing) {
  const auto ens = test::random_ensemble(3, 50, 2);
  for (Scheme s : {Scheme::kImplicit, Scheme::kExplicit, Scheme::kScore}) {
    const auto r = full_update(constant_net(3), ens, KernelSpec{3, -3.0, 1.0, 1e-10}, 0.3, s);
    EXPECT_EQ(r.ensemble.velocities, ens.velocities);
    EXPECT_EQ(r.ensemble.log_density, ens.log_density);
  }
}

TEST(FullUpdate, MomentumConserved) {
  for (double gamma : {0.0, -3.0}) {
    const auto ens = test::random_ensemble(3, 300, 3);
    const auto net = test::random_net(3, 4);
    const KernelSpec spec = KernelSpec::with_default_guard(3, gamma, 0.5);
    for (Scheme s : {Scheme::kImplicit, Scheme::kExplicit}) {
      const auto r = full_update(net, ens, spec, 0.1, s);
      EXPECT_LE((moments(r.ensemble).momentum - moments(ens).momentum).cwiseAbs().maxCoeff(), 1e-12);
      Pcg32 rng(5, 4);
      const auto rb = rbm_update(net, ens, spec, 0.1, s, 16, rng);
      EXPECT_LE((moments(rb.ensemble).momentum - moments(ens).momentum).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}

TEST(FullUpdate, EnergyNeverDecreasesForFullUpdate) {
  // sum v.F = 0 pairwise, so E^{n+1} - E^n = (tau^2/N) sum |F_i|^2 >= 0
  const auto ens = test::random_ensemble(2, 200, 6);
  const auto net = test::random_net(2, 7);
  const auto r = full_update(net, ens, KernelSpec{2, 0.0, 1.0, 0.0}, 0.05, Scheme::kImplicit);
  EXPECT_GE(moments(r.ensemble).energy - moments(ens).energy, -1e-13);
}

TEST(FullUpdate, ImplicitDensityUsesNewPositions) {
  const auto ens = test::random_ensemble(2, 20, 8);
  const auto net = test::random_net(2, 9);
  const KernelSpec spec{2, 0.0, 1.0, 0.0};
  const double tau = 0.1;
  const auto r = full_update(net, ens, spec, tau, Scheme::kImplicit);
  const Mat& p = r.ensemble.velocities;
  for (Index i = 0; i < 20; i += 7) {
    double s = 0.0;
    for (Index j = 0; j < 20; ++j)
      s += pair_logdet_rate(p.col(i), p.col(j), net.forward(p.col(i)), net.forward(p.col(j)),
                            net.input_jacobian(p.col(i)), spec);
    EXPECT_NEAR(r.ensemble.log_density(i) - ens.log_density(i), tau / 20 * s, 1e-13);
  }
  const auto e = full_update(net, ens, spec, tau, Scheme::kExplicit);
  const Mat& v = ens.velocities;
  double s = 0.0;
  for (Index j = 0; j < 20; ++j)
    s += pair_logdet_rate(v.col(3), v.col(j), net.forward(v.col(3)), net.forward(v.col(j)), net.input_jacobian(v.col(3)),
                          spec);
  EXPECT_NEAR(e.ensemble.log_density(3) - ens.log_density(3), tau / 20 * s, 1e-13);
}

TEST(RbmUpdate, FullBatchIsBitIdentical) {
  const auto ens = test::random_ensemble(2, 40, 10);
  const auto net = test::random_net(2, 11);
  const KernelSpec spec{2, 0.0, 1.0, 0.0};
  Pcg32 rng(12, 4);
  const auto a = full_update(net, ens, spec, 0.1, Scheme::kImplicit);
  const auto b = rbm_update(net, ens, spec, 0.1, Scheme::kImplicit, 40, rng);
  EXPECT_EQ(a.ensemble.velocities, b.ensemble.velocities);
  EXPECT_EQ(a.ensemble.log_density, b.ensemble.log_density);
}

TEST(RbmUpdate, MeanIncrementMatchesFullUpdate) {
  const Index n = 32;
  const auto ens = test::random_ensemble(2, n, 13);
  const auto net = test::random_net(2, 14);
  const KernelSpec spec{2, 0.0, 1.0, 0.0};
  const double tau = 0.1;
  const Mat full = full_update(net, ens, spec, tau, Scheme::kExplicit).ensemble.velocities - ens.velocities;
  const int reps = 4000;
  Pcg32 rng(15, 4);
  Mat s = Mat::Zero(2, n), s2 = Mat::Zero(2, n);
  for (int r = 0; r < reps; ++r) {
    const Mat inc = rbm_update(net, ens, spec, tau, Scheme::kExplicit, 4, rng).ensemble.velocities - ens.velocities;
    s += inc;
    s2 += inc.cwiseProduct(inc);
  }
  const Mat mean = s / reps;
  const Mat se = ((s2 / reps - mean.cwiseProduct(mean)) / reps).cwiseSqrt();
  // probe particle 0, each component
  for (Index k = 0; k < 2; ++k) EXPECT_LE(std::abs(mean(k, 0) - full(k, 0)), 3.0 * se(k, 0));
  const double z_max = ((mean - full).cwiseAbs().array() / se.array()).maxCoeff();
  EXPECT_LE(z_max, 4.5);
}

TEST(JkoStep, EntropyDecreasesAndLossNonPositive) {
  const auto cfg = small_config(Scheme::kImplicit);
  const auto ens = sample_initial(cfg.initial, cfg.n_particles, cfg.seed);
  const auto res = jko_step(ens, cfg, 0);
  EXPECT_LE(res.record.diag.loss_value, 1e-6);
  EXPECT_LE(res.record.diag.entropy_estimate, moments(ens).entropy_estimate + 1e-6);
  EXPECT_EQ(res.record.step, 1);
  EXPECT_NEAR(res.ensemble.time, ens.time + cfg.tau, 1e-15);
  EXPECT_LE((res.record.diag.momentum - moments(ens).momentum).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Run, ZeroStepsAndDeterminism) {
  auto cfg = small_config(Scheme::kImplicit);
  cfg.n_steps = 0;
  EXPECT_EQ(run(cfg).size(), 1u);
  cfg.n_steps = 2;
  const auto a = run(cfg);
  const auto b = run(cfg);
  ASSERT_EQ(a.size(), 3u);
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(a[k].diag.energy, b[k].diag.energy);
    EXPECT_EQ(a[k].diag.entropy_estimate, b[k].diag.entropy_estimate);
    EXPECT_EQ(a[k].diag.loss_value, b[k].diag.loss_value);
  }
}

TEST(Run, ThreadCountDoesNotChangeResults) {
  auto cfg = small_config(Scheme::kExplicit);
  cfg.n_steps = 1;
  set_thread_count(1);
  const auto a = run(cfg);
  set_thread_count(3);
  const auto b = run(cfg);
  set_thread_count(1);
  EXPECT_EQ(a.back().diag.energy, b.back().diag.energy);
  EXPECT_EQ(a.back().diag.entropy_estimate, b.back().diag.entropy_estimate);
}

TEST(Run, WritesFilesAndCheckpoints) {
  auto cfg = small_config(Scheme::kScore);
  cfg.n_steps = 2;
  const auto dir = std::filesystem::temp_directory_path() / "landau_run_test";
  std::filesystem::remove_all(dir);
  run(cfg, RunOutput{dir, "abc123", 1});
  EXPECT_TRUE(std::filesystem::exists(dir / "diagnostics.csv"));
  EXPECT_TRUE(std::filesystem::exists(dir / "train_log.jsonl"));
  EXPECT_TRUE(std::filesystem::exists(dir / "checkpoints" / "ensemble_00002.bin"));
  EXPECT_TRUE(std::filesystem::exists(dir / "checkpoints" / "net_final.bin"));
  std::ifstream is(dir / "diagnostics.csv");
  std::string header, row;
  std::getline(is, header);
  std::getline(is, row);
  EXPECT_EQ(header, diagnostics_header(2));
  EXPECT_EQ(row.substr(row.size() - 6), "abc123");
}

TEST(RunConfig, Validation) {
  auto cfg = small_config(Scheme::kImplicit);
  cfg.tau = -1.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = small_config(Scheme::kImplicit);
  cfg.rbm_batch = 1000;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = small_config(Scheme::kImplicit);
  cfg.kernel.dim = 3;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}
