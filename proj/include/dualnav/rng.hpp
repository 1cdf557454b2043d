#pragma once

#include <cstdint>
#include <random>

namespace dualnav {

// Mixes a master seed with a stream index (splitmix64 finalizer). Used to give
// every episode, frame, and worker its own independent stream.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

// Thin wrapper around mt19937_64. The distributions are implemented here rather
// than through <random> so that streams are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);

 private:
  std::mt19937_64 engine_;
};

}  // namespace dualnav
