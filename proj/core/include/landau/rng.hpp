#pragma once

#include <cstdint>
#include <limits>

namespace landau {

/// PCG32 (XSH-RR 64/32), O'Neill 2014. Satisfies UniformRandomBitGenerator,
/// so it plugs into <random> distributions and std::shuffle.
///
/// Every stochastic component owns one of these. Streams are selected with
/// the `stream` argument so that, e.g., training reshuffles and random-batch
/// particle updates never share a sequence.
class Pcg32 {
 public:
  using result_type = std::uint32_t;

  Pcg32() : Pcg32(0x853c49e6748fea9bULL, 0xda3e39cb94b95bdbULL) {}
  Pcg32(std::uint64_t seed, std::uint64_t stream);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform();

  bool operator==(const Pcg32&) const = default;

 private:
  std::uint64_t state_ = 0;
  std::uint64_t inc_ = 1;
};

/// Mixes a base seed with a tag (step index, run index, ...) into a new seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag);

// Stream ids used across the library.
namespace streams {
inline constexpr std::uint64_t kSampling = 1;
inline constexpr std::uint64_t kNetInit = 2;
inline constexpr std::uint64_t kTraining = 3;
inline constexpr std::uint64_t kParticleBatching = 4;
inline constexpr std::uint64_t kHarness = 5;
}  // namespace streams

}  // namespace landau
