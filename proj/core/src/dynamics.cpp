#include "landau/dynamics.hpp"

#include "landau/checkpoint.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace landau {
namespace {

using Clock = std::chrono::steady_clock;

constexpr Index kEvalChunk = 2048;

// Net evaluation in column blocks to bound tape memory for large N.
void evaluate_chunked(const VectorFieldNet& net, const Mat& x, Mat& u, Mat* jac) {
  const Index d = x.rows();
  const Index n = x.cols();
  u.resize(d, n);
  if (jac) jac->resize(d, d * n);
  Mat ub, jb;
  for (Index s = 0; s < n; s += kEvalChunk) {
    const Index len = std::min(kEvalChunk, n - s);
    net.evaluate(x.middleCols(s, len), ub, jac ? &jb : nullptr);
    u.middleCols(s, len) = ub;
    if (jac) jac->middleCols(s * d, len * d) = jb;
  }
}

struct GroupUpdate {
  Mat velocities;
  Vec dlog;
  double objective = 0.0;
  long guard_hits = 0;
};

// Update of one interacting group with per-pair weight `scale` (tau/N for the
// full update). v and u are the group's positions and field values at v^n.
GroupUpdate update_group(const VectorFieldNet& net, const Mat& v, const Mat& u, const Mat* jac_old,
                         const KernelSpec& spec, double scale, Scheme scheme) {
  const Index m = v.cols();
  std::vector<Index> all(static_cast<std::size_t>(m));
  for (Index k = 0; k < m; ++k) all[static_cast<std::size_t>(k)] = k;

  GroupUpdate g;
  // tilde_from_values divides by the column count
  g.velocities = tilde_from_values(v, u, all, scale * static_cast<double>(m), spec);
  if (!g.velocities.allFinite()) {
    for (Index i = 0; i < m; ++i)
      if (!g.velocities.col(i).allFinite())
        throw NumericalError("non-finite velocity after update at group particle " + std::to_string(i));
  }

  PairTotals t;
  if (scheme == Scheme::kImplicit) {
    Mat u_new, j_new;
    evaluate_chunked(net, g.velocities, u_new, &j_new);
    t = pair_totals(g.velocities, u_new, j_new, spec, true);
    if (!std::isfinite(t.logdet) || !std::isfinite(t.quadratic))
      detail::report_nonfinite_pair(g.velocities, u_new, j_new, spec, all);
  } else {
    t = pair_totals(v, u, *jac_old, spec, true);
    if (!std::isfinite(t.logdet) || !std::isfinite(t.quadratic)) detail::report_nonfinite_pair(v, u, *jac_old, spec, all);
  }
  g.dlog = scale * t.logdet_rows;
  g.objective = scale * scale * (t.quadratic + 2.0 * t.logdet);
  g.guard_hits = t.guard_hits;
  return g;
}

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

}  // namespace

void RunConfig::validate() const {
  kernel.validate();
  if (dimension(initial) != kernel.dim) throw std::invalid_argument("initial condition and kernel disagree on dim");
  if (n_particles < 2) throw std::invalid_argument("n_particles must be >= 2");
  if (!(tau > 0.0)) throw std::invalid_argument("tau must be > 0");
  if (n_steps < 0) throw std::invalid_argument("n_steps must be >= 0");
  if (rbm_batch < 0 || rbm_batch > n_particles) throw std::invalid_argument("rbm_batch must lie in [0, N]");
  first_train.validate(n_particles);
  later_train.validate(n_particles);
}

UpdateResult full_update(const VectorFieldNet& net, const ParticleEnsemble& ens, const KernelSpec& spec, double tau,
                         Scheme scheme) {
  Mat u, jac;
  evaluate_chunked(net, ens.velocities, u, scheme == Scheme::kImplicit ? nullptr : &jac);
  const GroupUpdate g =
      update_group(net, ens.velocities, u, &jac, spec, tau / static_cast<double>(ens.count()), scheme);
  UpdateResult r;
  r.ensemble.velocities = g.velocities;
  r.ensemble.log_density = ens.log_density + g.dlog;
  r.ensemble.time = ens.time + tau;
  r.ensemble.preset = ens.preset;
  r.objective = g.objective;
  r.guard_hits = g.guard_hits;
  r.ensemble.validate();
  return r;
}

UpdateResult rbm_update(const VectorFieldNet& net, const ParticleEnsemble& ens, const KernelSpec& spec, double tau,
                        Scheme scheme, Index b_prime, Pcg32& rng, RbmNormalization norm) {
  const Index n = ens.count();
  if (b_prime < 1) throw std::invalid_argument("rbm batch must be >= 1");
  if (b_prime >= n) return full_update(net, ens, spec, tau, scheme);

  Mat u, jac;
  evaluate_chunked(net, ens.velocities, u, scheme == Scheme::kImplicit ? nullptr : &jac);
  const auto batches = reshuffle_partition(n, b_prime, rng);
  UpdateResult r;
  r.ensemble = ens;
  r.ensemble.time = ens.time + tau;
  const Index d = ens.dim();
  for (const auto& batch : batches) {
    const auto b = static_cast<Index>(batch.size());
    if (b < 2) continue;  // a lone particle has no partner
    const double w = norm == RbmNormalization::kInverseBatch
                         ? 1.0 / static_cast<double>(b)
                         : static_cast<double>(n - 1) / (static_cast<double>(n) * static_cast<double>(b - 1));
    const Mat v = gather_columns(ens.velocities, batch);
    const Mat ub = gather_columns(u, batch);
    Mat jb;
    if (scheme != Scheme::kImplicit) {
      jb.resize(d, d * b);
      for (Index k = 0; k < b; ++k) jb.middleCols(k * d, d) = jac.middleCols(batch[k] * d, d);
    }
    const GroupUpdate g = update_group(net, v, ub, &jb, spec, tau * w, scheme);
    for (Index k = 0; k < b; ++k) {
      r.ensemble.velocities.col(batch[k]) = g.velocities.col(k);
      r.ensemble.log_density(batch[k]) += g.dlog(k);
    }
    r.objective += g.objective * static_cast<double>(b) / static_cast<double>(n);
    r.guard_hits += g.guard_hits;
  }
  r.ensemble.validate();
  return r;
}

StepResult jko_step(const ParticleEnsemble& ens, const RunConfig& cfg, int step, const VectorFieldNet* previous,
                    const EpochSink& sink) {
  const auto t0 = Clock::now();
  const int d = ens.dim();
  VectorFieldNet net = (cfg.warm_start && step > 0 && previous != nullptr)
                           ? VectorFieldNet::warm_start(*previous, d)
                           : VectorFieldNet::truncated_normal(d, derive_seed(cfg.seed, static_cast<std::uint64_t>(step)));
  const TrainConfig& tc = step == 0 ? cfg.first_train : cfg.later_train;

  VectorFieldNet work = net;
  const BatchObjective objective = [&](std::span<const Index> batch, const Vec& theta, Vec& grad) {
    work.set_params(theta);
    LossBatch lb{{batch.begin(), batch.end()}, cfg.scheme, cfg.tau};
    LossGradient lg = loss_and_gradient(work, ens, lb, cfg.kernel, cfg.tilde);
    grad = std::move(lg.grad);
    return lg.value;
  };

  Pcg32 train_rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(step)), streams::kTraining);
  AdamaxState state;
  state.reset(net.num_params());
  Vec theta = net.params();
  EpochStats last;
  for (int e = 0; e < tc.epochs; ++e) {
    last = tc.optimizer == Optimizer::kAdamaxRR ? adamax_rr_epoch(theta, objective, ens.count(), tc, state, train_rng)
                                                : sgd_rr_epoch(theta, objective, ens.count(), tc, train_rng);
    last.epoch = e;
    if (sink) sink(step, last);
  }
  net.set_params(theta);

  UpdateResult upd;
  if (cfg.rbm_batch > 0 && cfg.rbm_batch < ens.count()) {
    Pcg32 batch_rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(step)), streams::kParticleBatching);
    upd = rbm_update(net, ens, cfg.kernel, cfg.tau, cfg.scheme, cfg.rbm_batch, batch_rng, cfg.rbm_normalization);
  } else {
    upd = full_update(net, ens, cfg.kernel, cfg.tau, cfg.scheme);
  }

  StepResult out{std::move(net), std::move(upd.ensemble), {}};
  out.record.step = step + 1;
  out.record.diag = moments(out.ensemble);
  out.record.diag.loss_value = upd.objective;
  out.record.diag.guard_hits = upd.guard_hits;
  out.record.train_loss = last.mean_loss;
  out.record.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
  return out;
}

std::string diagnostics_header(int dim) {
  std::string h = "step,time,energy";
  for (int k = 0; k < dim; ++k) h += ",momentum_" + std::to_string(k);
  h += ",entropy_estimate,loss,guard_hits,wall_ms,train_loss,manifest";
  return h;
}

std::string diagnostics_row(const StepRecord& r, const std::string& manifest_hash) {
  std::ostringstream os;
  os << r.step << ',' << fmt(r.diag.time) << ',' << fmt(r.diag.energy);
  for (Index k = 0; k < r.diag.momentum.size(); ++k) os << ',' << fmt(r.diag.momentum(k));
  os << ',' << fmt(r.diag.entropy_estimate) << ',' << fmt(r.diag.loss_value) << ',' << r.diag.guard_hits << ','
     << fmt(r.wall_ms) << ',' << fmt(r.train_loss) << ',' << manifest_hash;
  return os.str();
}

std::vector<StepRecord> run(const RunConfig& cfg, const RunOutput& out, const StepObserver& observer) {
  cfg.validate();
  ParticleEnsemble ens = sample_initial(cfg.initial, cfg.n_particles, cfg.seed);
  std::vector<StepRecord> records;

  std::ofstream csv, log;
  const bool files = !out.dir.empty();
  const auto ckpt_dir = out.dir / "checkpoints";
  if (files) {
    std::filesystem::create_directories(ckpt_dir);
    csv.open(out.dir / "diagnostics.csv");
    log.open(out.dir / "train_log.jsonl");
    if (!csv || !log) throw std::runtime_error("cannot write run files in " + out.dir.string());
    csv << diagnostics_header(ens.dim()) << '\n';
  }
  auto checkpoint = [&](const ParticleEnsemble& e, const VectorFieldNet* net, const std::string& tag) {
    if (!files) return;
    save_ensemble(e, ckpt_dir / ("ensemble_" + tag + ".bin"));
    if (net) save_net(*net, ckpt_dir / ("net_" + tag + ".bin"));
  };

  StepRecord initial;
  initial.diag = moments(ens);
  records.push_back(initial);
  if (files) csv << diagnostics_row(initial, out.manifest_hash) << '\n' << std::flush;
  if (observer) observer(ens, initial);

  const EpochSink sink = [&](int step, const EpochStats& s) {
    if (!files) return;
    EpochStats row = s;
    if (!out.timings) row.wall_ms = 0.0;
    write_epoch_jsonl(log, row, step);
  };

  std::optional<VectorFieldNet> net;
  for (int n = 0; n < cfg.n_steps; ++n) {
    StepResult res;
    try {
      res = jko_step(ens, cfg, n, net ? &*net : nullptr, sink);
    } catch (...) {
      checkpoint(ens, net ? &*net : nullptr, "last_good");
      throw;
    }
    if (!out.timings) res.record.wall_ms = 0.0;
    ens = std::move(res.ensemble);
    net = std::move(res.net);
    records.push_back(res.record);
    if (files) csv << diagnostics_row(res.record, out.manifest_hash) << '\n' << std::flush;
    if (observer) observer(ens, res.record);
    if (out.checkpoint_every > 0 && (n + 1) % out.checkpoint_every == 0) {
      char tag[16];
      std::snprintf(tag, sizeof tag, "%05d", n + 1);
      checkpoint(ens, &*net, tag);
    }
  }
  checkpoint(ens, net ? &*net : nullptr, "final");
  return records;
}

}  // namespace landau
