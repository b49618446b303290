#pragma once

#include "landau/rng.hpp"
#include "landau/types.hpp"

#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

namespace landau {

enum class Optimizer { kSgdRR, kAdamaxRR };

struct TrainConfig {
  Index batch_size = 1280;
  int epochs = 5;
  double lr = 2e-4;
  Optimizer optimizer = Optimizer::kAdamaxRR;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  /// Throws std::invalid_argument naming the offending field. n = particle count.
  void validate(Index n) const;
};

/// Random permutation of [0, n) cut into ceil(n/b) contiguous batches; the
/// last one holds the n mod b leftovers when b does not divide n.
std::vector<std::vector<Index>> reshuffle_partition(Index n, Index b, Pcg32& rng);

/// Batch objective: returns the batch loss at theta and writes its gradient
/// (already carrying the 1/b^2 batch normalization) into grad.
using BatchObjective = std::function<double(std::span<const Index> batch, const Vec& theta, Vec& grad)>;

struct EpochStats {
  int epoch = 0;
  double mean_loss = 0.0;     // average of the batch losses seen during the epoch
  double mean_grad_norm = 0.0;
  double wall_ms = 0.0;
};

/// One reshuffled SGD pass: step alpha * b/n per batch of size b.
EpochStats sgd_rr_epoch(Vec& theta, const BatchObjective& objective, Index n, const TrainConfig& cfg, Pcg32& rng);

struct AdamaxState {
  Vec m;
  Vec u;
  long t = 0;

  void reset(Index n_params) {
    m = Vec::Zero(n_params);
    u = Vec::Zero(n_params);
    t = 0;
  }
};

/// One reshuffled pass with Adamax updates:
///   m = b1 m + (1-b1) g,  u = max(b2 u, |g|),  theta -= lr/(1-b1^t) * m/(u + eps)
EpochStats adamax_rr_epoch(Vec& theta, const BatchObjective& objective, Index n, const TrainConfig& cfg,
                           AdamaxState& state, Pcg32& rng);

/// Writes {"epoch":..,"loss":..,"grad_norm":..,"wall_ms":..} plus the extra
/// fields as one JSON line.
void write_epoch_jsonl(std::ostream& os, const EpochStats& s, int step);

/// Double-sum objective used to probe the convergence bound of reshuffled SGD:
///   l_ij(theta) = (g_i + g_j)/2,  g_i = h_i/2 (theta - c_i)^2,
///   c_i = -spread (h_i - mean h)/h_i
/// so the full objective (1/n^2) sum l_ij has its minimizer at theta = 0,
/// smoothness L = max h and nonzero per-batch gradient noise at the optimum.
struct SyntheticDoubleSum {
  Vec h;
  Vec c;

  static SyntheticDoubleSum make(Index n, double h_min, double h_max, double spread);
  Index size() const { return h.size(); }
  double full_gradient(double theta) const;
  BatchObjective objective() const;
};

struct HarnessRow {
  double alpha = 0.0;
  int epochs = 0;
  double theta0 = 0.0;
  double avg_sq_grad = 0.0;  // (1/K) sum_k |grad l(theta_k)|^2 over epoch-end iterates
};

/// Runs sgd_rr for every (alpha, K) pair from theta0 after `burn_in(alpha)`
/// discarded epochs, and records the average squared full gradient.
std::vector<HarnessRow> convergence_harness(const SyntheticDoubleSum& problem, std::span<const double> alphas,
                                            std::span<const int> epochs, double theta0, Index batch,
                                            const std::function<int(double)>& burn_in, std::uint64_t seed);

}  // namespace landau
