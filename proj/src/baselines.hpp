#pragma once

// Zero-knowledge baseline generators. All three share the classic
// x' = (1103515245 x + 12345) mod 2^31 recurrence and draw indices from its
// rand()-style output, bits 30..16 of the state. The low state bits have
// short periods (bit 0 alternates every step) and would make consecutive
// draws strongly dependent.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "domain.hpp"

namespace pkdga {

class Lcg {
 public:
  static constexpr std::uint64_t kMultiplier = 1103515245ULL;
  static constexpr std::uint64_t kIncrement = 12345ULL;
  static constexpr std::uint64_t kModulus = 1ULL << 31;

  explicit Lcg(std::uint64_t seed) : state_(seed % kModulus) {}

  std::uint64_t next() {
    state_ = (kMultiplier * state_ + kIncrement) % kModulus;
    return state_;
  }
  std::uint64_t state() const { return state_; }

  // 15-bit output of the next step.
  std::uint64_t output() { return next() >> 16; }

  // Index in [0, n): output mod n, widened to two outputs when n > 2^15.
  std::uint64_t below(std::uint64_t n) {
    if (n <= (1ULL << 15)) return output() % n;
    const std::uint64_t hi = output();
    return ((hi << 15) | output()) % n;
  }

 private:
  std::uint64_t state_;
};

class WordDict {
 public:
  // Throws kData on an empty list or a word that is not a valid label fragment.
  explicit WordDict(std::vector<std::string> words);
  static WordDict load(const std::filesystem::path& path);

  const std::vector<std::string>& words() const { return words_; }
  std::size_t size() const { return words_.size(); }
  const std::string& operator[](std::size_t i) const { return words_[i]; }

  // Alternating halves, for generators that need two dictionaries.
  std::pair<WordDict, WordDict> split() const;

 private:
  std::vector<std::string> words_;
};

struct LengthRange {
  std::size_t min = 6;
  std::size_t max = 11;
};

std::vector<DomainSequence> kraken_generate(std::uint64_t seed, std::size_t count,
                                            LengthRange len = {});

std::vector<DomainSequence> gozi_generate(const WordDict& dict, std::uint64_t seed,
                                          std::size_t count, LengthRange words_per_name = {2, 4});

std::vector<DomainSequence> suppobox_generate(const WordDict& first, const WordDict& second,
                                              std::uint64_t seed, std::size_t count);

}  // namespace pkdga
