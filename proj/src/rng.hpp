#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>
#include <span>

namespace pkdga {

// SplitMix64 finalizer; the building block for counter-derived streams.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Derives an independent stream key from a parent key and a path of counters,
// e.g. derive_stream(master, {epoch, episode, step, action, rollout}).
constexpr std::uint64_t derive_stream(std::uint64_t key,
                                      std::initializer_list<std::uint64_t> path) noexcept {
  for (std::uint64_t c : path) key = mix64(key ^ mix64(c + 0x632be59bd9b4e019ULL));
  return key;
}

// Counter-based generator: output i is mix64(key + i * golden). Satisfies
// UniformRandomBitGenerator so it plugs into <random> where needed.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit constexpr Rng(std::uint64_t key = 0) noexcept : key_(key) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() noexcept {
    return mix64(key_ + (counter_++) * 0x9e3779b97f4a7c15ULL);
  }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, bound); bound > 0. Lemire-style rejection-free
  // multiply is biased by < 2^-64 * bound, irrelevant at these bounds.
  std::uint64_t below(std::uint64_t bound) noexcept {
    __extension__ using u128 = unsigned __int128;
    return static_cast<std::uint64_t>((static_cast<u128>((*this)()) * bound) >> 64);
  }

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// Draws an index from a discrete distribution given as nonnegative weights
// summing to ~1. Falls back to the last positive entry on round-off.
template <typename Real>
std::size_t sample_discrete(std::span<const Real> probs, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= Real(0)) continue;
    acc += static_cast<double>(probs[i]);
    last_positive = i;
    if (u < acc) return i;
  }
  return last_positive;
}

}  // namespace pkdga
