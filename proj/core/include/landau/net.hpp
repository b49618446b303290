#pragma once

#include "landau/types.hpp"

#include <cstdint>

namespace landau {

/// u_theta: R^d -> R^d, d -> 32 -> 32 -> 32 -> d, swish hidden layers and an
/// identity output layer.
///
/// Flat parameter layout (column-major blocks, in this order):
///   W1 (32 x d), b1 (32), W2 (32 x 32), b2 (32), W3 (32 x 32), b3 (32),
///   W4 (d x 32), b4 (d)
///
/// Batched Jacobians use a particle-major layout: for B inputs, J is
/// d x (d*B) and J.middleCols(p*d, d) is [du_a/dv_b] at input p.
class VectorFieldNet {
 public:
  static constexpr int kWidth = 32;
  static constexpr int kLayers = 4;

  enum class Activation { kSwish, kIdentity };

  VectorFieldNet() = default;
  /// All parameters zero.
  explicit VectorFieldNet(int dim);

  static Index param_count(int dim) { return 2 * kWidth * dim + dim + 2 * kWidth * kWidth + 3 * kWidth; }

  /// Weights ~ N(0, 1/fan_in) truncated at two standard deviations, biases 0.
  static VectorFieldNet truncated_normal(int dim, std::uint64_t seed);
  /// Copy of `previous`; throws std::invalid_argument on a dimension mismatch.
  static VectorFieldNet warm_start(const VectorFieldNet& previous, int dim);

  int dim() const { return dim_; }
  Index num_params() const { return params_.size(); }
  const Vec& params() const { return params_; }
  void set_params(const Eigen::Ref<const Vec>& theta);

  /// Hidden activation. kIdentity turns the net into a linear map (test probe).
  Activation activation() const { return activation_; }
  void set_activation(Activation a) { activation_ = a; }

  Vec forward(const Eigen::Ref<const Vec>& v) const;
  Mat input_jacobian(const Eigen::Ref<const Vec>& v) const;

  /// U = u(X) column by column; J (if non-null) in the particle-major layout.
  void evaluate(const Eigen::Ref<const Mat>& x, Mat& u, Mat* jac) const;

  // Parameter block views. layer in [0, 4).
  Eigen::Map<const Mat> weight(int layer) const;
  Eigen::Map<const Vec> bias(int layer) const;

  /// Offsets of the weight and bias blocks of `layer` in the flat vector.
  Index weight_offset(int layer) const;
  Index bias_offset(int layer) const;

 private:
  friend class NetTape;
  int dim_ = 0;
  Activation activation_ = Activation::kSwish;
  Vec params_;
};

/// Forward record of one batched evaluation, replayable in reverse to get
/// the gradient of any scalar built from U and J with respect to the
/// parameters and the inputs (mixed-mode: forward tangents in v, reverse
/// sweep in theta).
class NetTape {
 public:
  /// Runs the forward pass over the columns of `x`. With `with_jacobian`
  /// false only U is recorded, and backward() must be called with jbar = nullptr.
  void forward(const VectorFieldNet& net, const Eigen::Ref<const Mat>& x, bool with_jacobian);

  const Mat& u() const { return u_; }
  /// Particle-major Jacobians (empty without with_jacobian).
  const Mat& jacobian() const { return jac_; }
  Index batch() const { return x_.cols(); }

  /// Accumulates dL/dtheta into `grad` (size num_params) and, if `xbar` is
  /// non-null, writes dL/dX into it. ubar is d x B, jbar particle-major.
  void backward(const Eigen::Ref<const Mat>& ubar, const Mat* jbar, Vec& grad, Mat* xbar) const;

 private:
  const VectorFieldNet* net_ = nullptr;
  bool with_jacobian_ = false;
  Mat x_;
  Mat z_[3], s_[3], ds_[3];  // pre-activation, activation, activation'
  Mat zt_[3], t_[3];         // tangents, input-index-major: block k = cols [k*B, (k+1)*B)
  Mat u_, jac_;
};

double swish(double x);

}  // namespace landau
