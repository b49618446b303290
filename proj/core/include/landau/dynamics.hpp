#pragma once

#include "landau/ensemble.hpp"
#include "landau/kernels.hpp"
#include "landau/losses.hpp"
#include "landau/net.hpp"
#include "landau/optim.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace landau {

/// Per-batch weight in the random-batch update. kUnbiased uses
/// (N-1)/(N(b-1)) so the expected increment equals the full update;
/// kInverseBatch uses 1/b.
enum class RbmNormalization { kUnbiased, kInverseBatch };

struct RunConfig {
  KernelSpec kernel;
  InitialCondition initial = BiMaxwellian2d{};
  Index n_particles = 4096;
  double tau = 0.01;
  int n_steps = 1;
  Scheme scheme = Scheme::kImplicit;
  Index rbm_batch = 0;  // 0 = full update
  RbmNormalization rbm_normalization = RbmNormalization::kUnbiased;
  TrainConfig first_train;
  TrainConfig later_train;
  bool warm_start = true;
  TildeMode tilde = TildeMode::kBatch;
  std::uint64_t seed = 1;

  void validate() const;
};

struct UpdateResult {
  ParticleEnsemble ensemble;
  /// (tau^2/N^2) sum (d2 + 2h) at the positions used for the density update.
  /// For the implicit scheme with a full update this is the JKO objective
  /// at its own minimizer's push-forward, and loss <= 0 forces the entropy
  /// estimate down.
  double objective = 0.0;
  long guard_hits = 0;
};

/// v_i <- v_i - (tau/N) sum_j A(v_i - v_j)(u_i - u_j) with u at v^n, then
/// log f_i += (tau/N) sum_j h_ij at v^{n+1} (implicit) or at v^n (other schemes).
UpdateResult full_update(const VectorFieldNet& net, const ParticleEnsemble& ens, const KernelSpec& spec, double tau,
                         Scheme scheme);

/// Same update with the pair sums restricted to random batches of size
/// b_prime. b_prime >= N falls through to full_update.
UpdateResult rbm_update(const VectorFieldNet& net, const ParticleEnsemble& ens, const KernelSpec& spec, double tau,
                        Scheme scheme, Index b_prime, Pcg32& rng,
                        RbmNormalization norm = RbmNormalization::kUnbiased);

struct StepRecord {
  int step = 0;
  DiagnosticsRecord diag;
  double train_loss = 0.0;  // mean batch loss of the last epoch
  double wall_ms = 0.0;
};

struct StepResult {
  VectorFieldNet net;
  ParticleEnsemble ensemble;
  StepRecord record;
};

/// Training-log sink: (step, epoch stats).
using EpochSink = std::function<void(int, const EpochStats&)>;

/// One outer JKO iteration: init or warm-start the net, train on
/// the scheme's loss, push the particles forward. The input ensemble is
/// never modified.
StepResult jko_step(const ParticleEnsemble& ens, const RunConfig& cfg, int step,
                    const VectorFieldNet* previous = nullptr, const EpochSink& sink = {});

struct RunOutput {
  std::filesystem::path dir;  // empty: no files
  std::string manifest_hash;
  int checkpoint_every = 0;   // 0: final checkpoint only
  bool timings = true;        // false: wall-clock fields are written as 0
};

/// Called after every accepted step (and once for step 0 with the initial state).
using StepObserver = std::function<void(const ParticleEnsemble&, const StepRecord&)>;

/// Runs cfg.n_steps JKO steps from a fresh sample. With out.dir set, writes
/// diagnostics.csv, train_log.jsonl and checkpoints. A failing step is
/// rethrown after the last good state has been checkpointed.
std::vector<StepRecord> run(const RunConfig& cfg, const RunOutput& out = {}, const StepObserver& observer = {});

/// Header of diagnostics.csv for dimension d.
std::string diagnostics_header(int dim);
std::string diagnostics_row(const StepRecord& r, const std::string& manifest_hash);

}  // namespace landau
