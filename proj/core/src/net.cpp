#include "landau/net.hpp"

#include "landau/rng.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace landau {
namespace {

using Act = VectorFieldNet::Activation;

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// s = sigma(z), ds = sigma'(z)
void activate(Act act, const Mat& z, Mat& s, Mat& ds) {
  if (act == Act::kIdentity) {
    s = z;
    ds = Mat::Ones(z.rows(), z.cols());
    return;
  }
  s.resize(z.rows(), z.cols());
  ds.resize(z.rows(), z.cols());
  const Index n = z.size();
  const double* zp = z.data();
  double* sp = s.data();
  double* dp = ds.data();
  for (Index i = 0; i < n; ++i) {
    const double sg = sigmoid(zp[i]);
    sp[i] = zp[i] * sg;
    dp[i] = sg * (1.0 + zp[i] * (1.0 - sg));
  }
}

Mat second_derivative(Act act, const Mat& z) {
  if (act == Act::kIdentity) return Mat::Zero(z.rows(), z.cols());
  Mat out(z.rows(), z.cols());
  const Index n = z.size();
  for (Index i = 0; i < n; ++i) {
    const double x = z.data()[i];
    const double sg = sigmoid(x);
    out.data()[i] = sg * (1.0 - sg) * (2.0 + x * (1.0 - 2.0 * sg));
  }
  return out;
}

int rows_of(int layer, int dim) { return layer == 3 ? dim : VectorFieldNet::kWidth; }
int cols_of(int layer, int dim) { return layer == 0 ? dim : VectorFieldNet::kWidth; }

// particle-major (a, p*d + k)  <->  input-major (a, k*B + p)
Mat to_input_major(const Mat& pm, Index d, Index b) {
  Mat out(pm.rows(), d * b);
  for (Index p = 0; p < b; ++p)
    for (Index k = 0; k < d; ++k) out.col(k * b + p) = pm.col(p * d + k);
  return out;
}

Mat to_particle_major(const Mat& im, Index d, Index b) {
  Mat out(im.rows(), d * b);
  for (Index p = 0; p < b; ++p)
    for (Index k = 0; k < d; ++k) out.col(p * d + k) = im.col(k * b + p);
  return out;
}

}  // namespace

double swish(double x) { return x * sigmoid(x); }

VectorFieldNet::VectorFieldNet(int dim) : dim_(dim), params_(Vec::Zero(param_count(dim))) {
  if (dim < 1) throw std::invalid_argument("net dim must be >= 1");
}

VectorFieldNet VectorFieldNet::truncated_normal(int dim, std::uint64_t seed) {
  VectorFieldNet net(dim);
  Pcg32 rng(seed, streams::kNetInit);
  std::normal_distribution<double> normal;
  for (int l = 0; l < kLayers; ++l) {
    const double sd = 1.0 / std::sqrt(static_cast<double>(cols_of(l, dim)));
    const Index off = net.weight_offset(l);
    const Index n = static_cast<Index>(rows_of(l, dim)) * cols_of(l, dim);
    for (Index i = 0; i < n; ++i) {
      double x = 0.0;
      do {
        x = normal(rng);
      } while (std::abs(x) > 2.0);
      net.params_(off + i) = sd * x;
    }
  }
  return net;
}

VectorFieldNet VectorFieldNet::warm_start(const VectorFieldNet& previous, int dim) {
  if (previous.dim() != dim)
    throw std::invalid_argument("warm start: previous net has dim " + std::to_string(previous.dim()) +
                                ", expected " + std::to_string(dim));
  return previous;
}

void VectorFieldNet::set_params(const Eigen::Ref<const Vec>& theta) {
  if (theta.size() != params_.size())
    throw std::invalid_argument("set_params: expected " + std::to_string(params_.size()) + " values, got " +
                                std::to_string(theta.size()));
  params_ = theta;
}

Index VectorFieldNet::weight_offset(int layer) const {
  Index off = 0;
  for (int l = 0; l < layer; ++l) off += static_cast<Index>(rows_of(l, dim_)) * (cols_of(l, dim_) + 1);
  return off;
}

Index VectorFieldNet::bias_offset(int layer) const {
  return weight_offset(layer) + static_cast<Index>(rows_of(layer, dim_)) * cols_of(layer, dim_);
}

Eigen::Map<const Mat> VectorFieldNet::weight(int layer) const {
  return {params_.data() + weight_offset(layer), rows_of(layer, dim_), cols_of(layer, dim_)};
}

Eigen::Map<const Vec> VectorFieldNet::bias(int layer) const {
  return {params_.data() + bias_offset(layer), rows_of(layer, dim_)};
}

Vec VectorFieldNet::forward(const Eigen::Ref<const Vec>& v) const {
  Mat u;
  evaluate(v, u, nullptr);
  return u.col(0);
}

Mat VectorFieldNet::input_jacobian(const Eigen::Ref<const Vec>& v) const {
  Mat u, j;
  evaluate(v, u, &j);
  return j;
}

void VectorFieldNet::evaluate(const Eigen::Ref<const Mat>& x, Mat& u, Mat* jac) const {
  NetTape tape;
  tape.forward(*this, x, jac != nullptr);
  u = tape.u();
  if (jac) *jac = tape.jacobian();
}

void NetTape::forward(const VectorFieldNet& net, const Eigen::Ref<const Mat>& x, bool with_jacobian) {
  if (x.rows() != net.dim())
    throw std::invalid_argument("net input has " + std::to_string(x.rows()) + " rows, expected " +
                                std::to_string(net.dim()));
  net_ = &net;
  with_jacobian_ = with_jacobian;
  x_ = x;
  const Index d = net.dim();
  const Index b = x.cols();
  const auto act = net.activation();

  for (int l = 0; l < 3; ++l) {
    const auto w = net.weight(l);
    const Mat& prev = l == 0 ? x_ : s_[l - 1];
    z_[l] = (w * prev).colwise() + net.bias(l);
    activate(act, z_[l], s_[l], ds_[l]);
    if (!with_jacobian) continue;
    if (l == 0) {
      t_[0].resize(VectorFieldNet::kWidth, d * b);
      for (Index k = 0; k < d; ++k)
        t_[0].middleCols(k * b, b) = ds_[0].array().colwise() * w.col(k).array();
    } else {
      zt_[l] = w * t_[l - 1];
      t_[l].resize(VectorFieldNet::kWidth, d * b);
      for (Index k = 0; k < d; ++k)
        t_[l].middleCols(k * b, b) = ds_[l].array() * zt_[l].middleCols(k * b, b).array();
    }
  }
  u_ = (net.weight(3) * s_[2]).colwise() + net.bias(3);
  if (with_jacobian) {
    jac_ = to_particle_major(net.weight(3) * t_[2], d, b);
  } else {
    jac_.resize(0, 0);
  }
}

void NetTape::backward(const Eigen::Ref<const Mat>& ubar, const Mat* jbar, Vec& grad, Mat* xbar) const {
  if (net_ == nullptr) throw std::logic_error("NetTape::backward before forward");
  if (jbar != nullptr && !with_jacobian_) throw std::logic_error("NetTape::backward: no tangents recorded");
  const VectorFieldNet& net = *net_;
  const Index d = net.dim();
  const Index b = x_.cols();
  if (grad.size() != net.num_params()) grad = Vec::Zero(net.num_params());

  auto gw = [&](int l) {
    return Eigen::Map<Mat>(grad.data() + net.weight_offset(l), rows_of(l, static_cast<int>(d)),
                           cols_of(l, static_cast<int>(d)));
  };
  auto gb = [&](int l) { return Eigen::Map<Vec>(grad.data() + net.bias_offset(l), rows_of(l, static_cast<int>(d))); };

  const bool tangents = jbar != nullptr;
  Mat jbar_im;
  if (tangents) jbar_im = to_input_major(*jbar, d, b);

  gw(3).noalias() += ubar * s_[2].transpose();
  gb(3) += ubar.rowwise().sum();
  Mat sbar = net.weight(3).transpose() * ubar;
  Mat tbar;
  if (tangents) {
    gw(3).noalias() += jbar_im * t_[2].transpose();
    tbar = net.weight(3).transpose() * jbar_im;
  }

  for (int l = 2; l >= 0; --l) {
    const auto w = net.weight(l);
    Mat zbar = sbar.cwiseProduct(ds_[l]);
    Mat ztbar;
    if (tangents) {
      ztbar.resize(VectorFieldNet::kWidth, d * b);
      Mat dbar = Mat::Zero(VectorFieldNet::kWidth, b);
      for (Index k = 0; k < d; ++k) {
        ztbar.middleCols(k * b, b) = ds_[l].cwiseProduct(tbar.middleCols(k * b, b));
        if (l == 0) {
          dbar += (tbar.middleCols(k * b, b).array().colwise() * w.col(k).array()).matrix();
        } else {
          dbar += tbar.middleCols(k * b, b).cwiseProduct(zt_[l].middleCols(k * b, b));
        }
      }
      zbar += dbar.cwiseProduct(second_derivative(net.activation(), z_[l]));
    }
    gb(l) += zbar.rowwise().sum();
    if (l > 0) {
      gw(l).noalias() += zbar * s_[l - 1].transpose();
      sbar = w.transpose() * zbar;
      if (tangents) {
        gw(l).noalias() += ztbar * t_[l - 1].transpose();
        tbar = w.transpose() * ztbar;
      }
    } else {
      gw(0).noalias() += zbar * x_.transpose();
      if (tangents)
        for (Index k = 0; k < d; ++k) gw(0).col(k) += ztbar.middleCols(k * b, b).rowwise().sum();
      if (xbar) *xbar = w.transpose() * zbar;
    }
  }
}

}  // namespace landau
