#include "landau/net.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

using namespace landau;

namespace {

// L = sum(cu .* U) + sum(cj .* J)
double probe_scalar(const VectorFieldNet& net, const Mat& x, const Mat& cu, const Mat& cj) {
  Mat u, j;
  net.evaluate(x, u, &j);
  return cu.cwiseProduct(u).sum() + cj.cwiseProduct(j).sum();
}

}  // namespace

TEST(Net, SwishValues) {
  EXPECT_EQ(swish(0.0), 0.0);
  EXPECT_NEAR(swish(1.0), 0.7310585786300049, 1e-15);
}

TEST(Net, ParameterCountAndLayout) {
  VectorFieldNet net(3);
  EXPECT_EQ(net.num_params(), 32 * 3 + 32 + 32 * 32 + 32 + 32 * 32 + 32 + 3 * 32 + 3);
  EXPECT_EQ(net.weight_offset(0), 0);
  EXPECT_EQ(net.bias_offset(0), 96);
  EXPECT_EQ(net.weight_offset(1), 128);
  EXPECT_EQ(net.bias_offset(3), net.num_params() - 3);
}

TEST(Net, TruncatedNormalInit) {
  const auto net = VectorFieldNet::truncated_normal(2, 42);
  for (int l = 0; l < 4; ++l) {
    EXPECT_EQ(net.bias(l).cwiseAbs().maxCoeff(), 0.0);
    const double bound = 2.0 / std::sqrt(static_cast<double>(net.weight(l).cols()));
    EXPECT_LE(net.weight(l).cwiseAbs().maxCoeff(), bound);
    EXPECT_GT(net.weight(l).cwiseAbs().maxCoeff(), 0.0);
  }
  // variance before truncation is 1/fan_in; the truncated one is 0.774/fan_in
  const auto w2 = net.weight(1);
  const double var = w2.squaredNorm() / static_cast<double>(w2.size());
  EXPECT_NEAR(var * 32.0, 0.774, 0.08);
  EXPECT_EQ(VectorFieldNet::truncated_normal(2, 42).params(), net.params());
}

TEST(Net, WarmStartCopiesAndChecksDim) {
  const auto net = test::random_net(3, 1);
  EXPECT_EQ(VectorFieldNet::warm_start(net, 3).params(), net.params());
  EXPECT_THROW(VectorFieldNet::warm_start(net, 2), std::invalid_argument);
}

TEST(Net, ZeroNetIsZeroField) {
  VectorFieldNet net(2);
  EXPECT_EQ(net.forward(Eigen::Vector2d(0.3, -2.0)).norm(), 0.0);
  EXPECT_EQ(net.input_jacobian(Eigen::Vector2d(0.3, -2.0)).norm(), 0.0);
}

TEST(Net, JacobianMatchesFiniteDifferences) {
  for (int d : {2, 3, 10}) {
    const auto net = test::random_net(d, 3 + d);
    const Mat pts = test::random_matrix(d, 5, 9);
    const double h = 1e-5;
    for (Index p = 0; p < pts.cols(); ++p) {
      const Vec v = pts.col(p);
      const Mat j = net.input_jacobian(v);
      for (int k = 0; k < d; ++k) {
        Vec e = Vec::Zero(d);
        e(k) = h;
        const Vec fd = (net.forward(v + e) - net.forward(v - e)) / (2 * h);
        EXPECT_LE((fd - j.col(k)).norm(), 1e-6 * std::max(1.0, j.col(k).norm())) << "d=" << d << " k=" << k;
      }
    }
  }
}

TEST(Net, BatchedEvaluationMatchesSingle) {
  const auto net = test::random_net(3, 21);
  const Mat x = test::random_matrix(3, 7, 22);
  Mat u, j;
  net.evaluate(x, u, &j);
  for (Index p = 0; p < x.cols(); ++p) {
    EXPECT_LE((u.col(p) - net.forward(x.col(p))).norm(), 1e-14);
    EXPECT_LE((j.middleCols(p * 3, 3) - net.input_jacobian(x.col(p))).norm(), 1e-14);
  }
}

TEST(Net, LinearProbeJacobianIsWeightProduct) {
  auto net = test::random_net(3, 31);
  net.set_activation(VectorFieldNet::Activation::kIdentity);
  const Mat prod = net.weight(3) * net.weight(2) * net.weight(1) * net.weight(0);
  const Mat j = net.input_jacobian(Eigen::Vector3d(0.2, -1.0, 4.0));
  EXPECT_LE((j - prod).cwiseAbs().maxCoeff(), 1e-12 * (1.0 + prod.norm()));
}

TEST(Net, ParamGradientMatchesFiniteDifferences) {
  for (auto act : {VectorFieldNet::Activation::kSwish, VectorFieldNet::Activation::kIdentity}) {
    auto net = test::random_net(2, 41);
    net.set_activation(act);
    const Mat x = test::random_matrix(2, 6, 42);
    const Mat cu = test::random_matrix(2, 6, 43);
    const Mat cj = test::random_matrix(2, 12, 44);

    NetTape tape;
    tape.forward(net, x, true);
    Vec grad;
    Mat xbar;
    tape.backward(cu, &cj, grad, &xbar);

    const double h = 1e-5;
    double worst = 0.0;
    for (Index k = 0; k < net.num_params(); ++k) {
      VectorFieldNet plus = net, minus = net;
      Vec t = net.params();
      t(k) += h;
      plus.set_params(t);
      t(k) -= 2 * h;
      minus.set_params(t);
      const double fd = (probe_scalar(plus, x, cu, cj) - probe_scalar(minus, x, cu, cj)) / (2 * h);
      worst = std::max(worst, std::abs(fd - grad(k)) / std::max(1.0, std::abs(fd)));
    }
    EXPECT_LE(worst, 1e-6);

    for (Index p = 0; p < x.cols(); ++p)
      for (int k = 0; k < 2; ++k) {
        Mat xp = x, xm = x;
        xp(k, p) += h;
        xm(k, p) -= h;
        const double fd = (probe_scalar(net, xp, cu, cj) - probe_scalar(net, xm, cu, cj)) / (2 * h);
        EXPECT_NEAR(fd, xbar(k, p), 1e-6 * std::max(1.0, std::abs(fd)));
      }
  }
}

TEST(Net, SquaredOutputGradientVanishesAtZeroNet) {
  VectorFieldNet net(2);
  const Mat x = test::random_matrix(2, 4, 3);
  NetTape tape;
  tape.forward(net, x, false);
  Vec grad;
  tape.backward(2.0 * tape.u(), nullptr, grad, nullptr);
  EXPECT_EQ(grad.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Net, GradientIsLinearInTheLoss) {
  const auto net = test::random_net(3, 51);
  const Mat x = test::random_matrix(3, 5, 52);
  const Mat c1 = test::random_matrix(3, 5, 53), c2 = test::random_matrix(3, 5, 54);
  const Mat j1 = test::random_matrix(3, 15, 55), j2 = test::random_matrix(3, 15, 56);
  const double a = -1.7;
  NetTape tape;
  tape.forward(net, x, true);
  Vec g1, g2, g12;
  tape.backward(c1, &j1, g1, nullptr);
  tape.backward(c2, &j2, g2, nullptr);
  const Mat c12 = a * c1 + c2, j12 = a * j1 + j2;
  tape.backward(c12, &j12, g12, nullptr);
  EXPECT_LE((g12 - (a * g1 + g2)).cwiseAbs().maxCoeff(), 1e-12 * (1.0 + g12.cwiseAbs().maxCoeff()));
}

TEST(Net, InputDimensionMismatchThrows) {
  VectorFieldNet net(2);
  Mat u;
  EXPECT_THROW(net.evaluate(Mat::Zero(3, 2), u, nullptr), std::invalid_argument);
}
