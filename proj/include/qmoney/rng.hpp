#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace qmoney {

// SplitMix64 finalizer. Used to derive independent per-trial seeds.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

// Seed for trial `index` of a run with `master_seed`. Streams depend only on
// (master_seed, index), never on scheduling.
std::uint64_t stream_seed(std::uint64_t master_seed, std::uint64_t index) noexcept;

// mt19937_64 seeded through splitmix64. uniform() uses the top 53 bits so
// draws are identical across standard library implementations.
class Rng {
 public:
  static constexpr std::string_view kName = "mt19937_64/splitmix64-streams";

  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  double uniform() noexcept {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }
  bool bernoulli(double p) noexcept { return uniform() < p; }
  std::uint64_t next_u64() noexcept { return engine_(); }
  // Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound) noexcept;
  double normal() noexcept;

  // Child generator for a sub-task, derived from this generator's stream.
  Rng split() noexcept { return Rng(next_u64()); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace qmoney
