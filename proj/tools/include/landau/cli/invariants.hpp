#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace landau::cli {

struct CheckResult {
  std::string name;
  bool pass = false;
  double measured = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

/// Parameter gradients of the implicit, explicit and score losses against
/// central differences (step 1e-5), N = 8, d = 2, for gamma in {0, -3}.
/// measured = worst max_k |g_k - fd_k| / max(|fd_k|, 1e-3 max|fd|).
CheckResult check_gradients(std::uint64_t seed, double tolerance = 1e-4);

/// Largest relative change of the implicit and explicit losses under
/// u -> u + a + b v over `draws` random (a, b).
CheckResult check_null_space(std::uint64_t seed, int draws = 100, double tolerance = 1e-10);

/// Largest |change of mean velocity| component over one full and one
/// random-batch update on N = 1024 particles.
CheckResult check_momentum(std::uint64_t seed, double tolerance = 1e-12);

/// Mean one-step random-batch increment (B' = 32, N = 256) over `reps`
/// batchings against the full increment. measured = max |z| over the d
/// components of probe particle 0; detail lists the all-particle statistics
/// and the bias of the 1/B' weighting.
CheckResult check_rbm_unbiased(std::uint64_t seed, int reps = 10000, double z_limit = 3.0);

/// Reshuffled SGD on a synthetic double sum: floor ratio when alpha doubles
/// (must lie in [2, 8]) and the pre-floor log-log slope in K (must lie in
/// [-1.25, -0.75]).
std::vector<CheckResult> check_sgd_rr(std::uint64_t seed);

}  // namespace landau::cli
