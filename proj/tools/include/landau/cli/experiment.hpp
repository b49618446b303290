#pragma once

#include "landau/cli/config.hpp"
#include "landau/cli/table.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace landau::cli {

/// Version string baked in at configure time (project version + git revision).
std::string code_version();

/// 16 hex digits of FNV-1a over the canonical config text and the code version.
std::string manifest_hash(const ExperimentConfig& cfg);

/// Energy the dynamics should conserve: exact where the profile allows it.
double exact_energy(const InitialCondition& ic);

struct ExperimentOptions {
  bool reuse = true;               // skip the run if a complete run with the same manifest exists
  std::ostream* progress = nullptr;
  double blowup_factor = 0.0;      // > 0: abort once energy exceeds this multiple of its exact value
};

struct ExperimentResult {
  std::filesystem::path dir;
  std::string manifest_hash;
  bool reused = false;
  Table diagnostics;    // diagnostics.csv
  Table oracle_errors;  // oracle_errors.csv
};

/// Runs the configured experiment into dir:
///   config.resolved.txt, manifest.json, diagnostics.csv, oracle_errors.csv,
///   train_log.jsonl, checkpoints/.
/// Exceptions from the dynamics propagate after the partial files are flushed.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& dir,
                                const ExperimentOptions& opts = {});

struct ComparisonRow {
  std::string scheme;
  double tau = 0.0;
  std::string status;  // ok, drift (>10% energy drift) or diverged (the run threw)
  int steps_done = 0;
  double final_time = 0.0;
  double max_rel_energy_drift = 0.0;
  std::string error;
};

/// One run per (scheme, tau) under dir/<scheme>_tau<tau>, each with a seed
/// derived from the base seed. Failures are recorded, never rethrown.
/// Writes comparison.csv (merged trajectories) and comparison_summary.csv.
std::vector<ComparisonRow> compare_schemes(const ExperimentConfig& base, const std::vector<Scheme>& schemes,
                                           const std::vector<double>& taus, const std::filesystem::path& dir,
                                           const ExperimentOptions& opts = {});

}  // namespace landau::cli
