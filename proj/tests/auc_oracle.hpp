#pragma once

// Tie-corrected pairwise rank statistic: P(benign score > AGD score) plus
// half the probability of a tie, by brute force over all pairs.

#include <span>

#include "eval.hpp"

namespace pkdga::oracle {

inline double pairwise_auc(std::span<const ScoredLabel> s) {
  double wins = 0.0, pairs = 0.0;
  for (const auto& b : s) {
    if (b.label != Label::kBenign) continue;
    for (const auto& a : s) {
      if (a.label != Label::kAgd) continue;
      pairs += 1.0;
      if (b.score > a.score) wins += 1.0;
      else if (b.score == a.score) wins += 0.5;
    }
  }
  return wins / pairs;
}

// Up to `max_points` scores drawn from a small grid so ties are common,
// with both labels present.
inline std::vector<ScoredLabel> random_scores(Rng& rng, std::size_t max_points, std::size_t grid) {
  const std::size_t n = 2 + rng.below(max_points - 1);
  std::vector<ScoredLabel> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i].score = static_cast<double>(rng.below(grid)) / static_cast<double>(grid);
    out[i].label = i == 0 ? Label::kBenign : i == 1 ? Label::kAgd : (rng.below(2) ? Label::kBenign : Label::kAgd);
  }
  return out;
}

}  // namespace pkdga::oracle
