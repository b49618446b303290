#include "landau/optim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>

namespace landau {
namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

void check_gradient(const Vec& g, std::size_t batch_no) {
  if (g.allFinite()) return;
  Index slot = 0;
  while (slot < g.size() && std::isfinite(g(slot))) ++slot;
  throw NumericalError("non-finite gradient in batch " + std::to_string(batch_no) + " at parameter slot " +
                       std::to_string(slot));
}

template <typename Step>
EpochStats run_epoch(Vec& theta, const BatchObjective& objective, Index n, const TrainConfig& cfg, Pcg32& rng,
                     Step&& step) {
  cfg.validate(n);
  const auto t0 = Clock::now();
  const auto batches = reshuffle_partition(n, cfg.batch_size, rng);
  Vec grad(theta.size());
  double loss_sum = 0.0, norm_sum = 0.0;
  for (std::size_t q = 0; q < batches.size(); ++q) {
    grad.setZero();
    loss_sum += objective(batches[q], theta, grad);
    check_gradient(grad, q);
    norm_sum += grad.norm();
    step(grad, static_cast<Index>(batches[q].size()));
  }
  EpochStats s;
  s.mean_loss = loss_sum / static_cast<double>(batches.size());
  s.mean_grad_norm = norm_sum / static_cast<double>(batches.size());
  s.wall_ms = ms_since(t0);
  return s;
}

}  // namespace

void TrainConfig::validate(Index n) const {
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (batch_size > n)
    throw std::invalid_argument("batch_size " + std::to_string(batch_size) + " exceeds particle count " +
                                std::to_string(n));
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (!(lr > 0.0)) throw std::invalid_argument("lr must be > 0");
  if (!(beta1 > 0.0 && beta1 < 1.0)) throw std::invalid_argument("beta1 must lie in (0, 1)");
  if (!(beta2 > 0.0 && beta2 < 1.0)) throw std::invalid_argument("beta2 must lie in (0, 1)");
  if (!(eps > 0.0)) throw std::invalid_argument("eps must be > 0");
}

std::vector<std::vector<Index>> reshuffle_partition(Index n, Index b, Pcg32& rng) {
  if (b < 1 || b > n) throw std::invalid_argument("reshuffle_partition: need n >= b >= 1");
  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<std::vector<Index>> out;
  out.reserve(static_cast<std::size_t>((n + b - 1) / b));
  for (Index s = 0; s < n; s += b) out.emplace_back(perm.begin() + s, perm.begin() + std::min(n, s + b));
  return out;
}

EpochStats sgd_rr_epoch(Vec& theta, const BatchObjective& objective, Index n, const TrainConfig& cfg, Pcg32& rng) {
  return run_epoch(theta, objective, n, cfg, rng, [&](const Vec& g, Index b) {
    theta -= (cfg.lr * static_cast<double>(b) / static_cast<double>(n)) * g;
  });
}

EpochStats adamax_rr_epoch(Vec& theta, const BatchObjective& objective, Index n, const TrainConfig& cfg,
                           AdamaxState& state, Pcg32& rng) {
  if (state.m.size() != theta.size()) state.reset(theta.size());
  return run_epoch(theta, objective, n, cfg, rng, [&](const Vec& g, Index) {
    ++state.t;
    state.m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * g;
    state.u = (cfg.beta2 * state.u).cwiseMax(g.cwiseAbs());
    const double step = cfg.lr / (1.0 - std::pow(cfg.beta1, static_cast<double>(state.t)));
    theta.array() -= step * state.m.array() / (state.u.array() + cfg.eps);
  });
}

void write_epoch_jsonl(std::ostream& os, const EpochStats& s, int step) {
  const auto old = os.precision(12);
  os << "{\"step\":" << step << ",\"epoch\":" << s.epoch << ",\"loss\":" << s.mean_loss
     << ",\"grad_norm\":" << s.mean_grad_norm << ",\"wall_ms\":" << s.wall_ms << "}\n";
  os.precision(old);
}

SyntheticDoubleSum SyntheticDoubleSum::make(Index n, double h_min, double h_max, double spread) {
  if (n < 2 || !(h_min > 0.0) || !(h_max >= h_min)) throw std::invalid_argument("bad synthetic problem");
  SyntheticDoubleSum p;
  p.h = Vec::LinSpaced(n, h_min, h_max);
  const double hbar = p.h.mean();
  p.c = -spread * (p.h.array() - hbar) / p.h.array();
  return p;
}

double SyntheticDoubleSum::full_gradient(double theta) const {
  return (h.array() * (theta - c.array())).mean();
}

BatchObjective SyntheticDoubleSum::objective() const {
  return [this](std::span<const Index> batch, const Vec& theta, Vec& grad) {
    // (1/b^2) sum_{i,j} (g_i + g_j)/2 = (1/b) sum_i g_i
    const double b = static_cast<double>(batch.size());
    double value = 0.0, g = 0.0;
    for (Index i : batch) {
      const double e = theta(0) - c(i);
      value += 0.5 * h(i) * e * e;
      g += h(i) * e;
    }
    grad.resize(1);
    grad(0) = g / b;
    return value / b;
  };
}

std::vector<HarnessRow> convergence_harness(const SyntheticDoubleSum& problem, std::span<const double> alphas,
                                            std::span<const int> epochs, double theta0, Index batch,
                                            const std::function<int(double)>& burn_in, std::uint64_t seed) {
  std::vector<HarnessRow> rows;
  const auto obj = problem.objective();
  std::uint64_t run = 0;
  for (double alpha : alphas) {
    for (int k : epochs) {
      TrainConfig cfg;
      cfg.batch_size = batch;
      cfg.lr = alpha;
      cfg.epochs = k;
      cfg.optimizer = Optimizer::kSgdRR;
      Pcg32 rng(derive_seed(seed, run++), streams::kHarness);
      Vec theta = Vec::Constant(1, theta0);
      const int skip = burn_in ? burn_in(alpha) : 0;
      for (int e = 0; e < skip; ++e) sgd_rr_epoch(theta, obj, problem.size(), cfg, rng);
      double acc = 0.0;
      for (int e = 0; e < k; ++e) {
        sgd_rr_epoch(theta, obj, problem.size(), cfg, rng);
        const double g = problem.full_gradient(theta(0));
        acc += g * g;
      }
      rows.push_back({alpha, k, theta0, acc / k});
    }
  }
  return rows;
}

}  // namespace landau
