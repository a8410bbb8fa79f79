#include <algorithm>
#include <cmath>
#include <numeric>

#include "detectors.hpp"
#include "errors.hpp"

namespace pkdga {

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  require(p.size() == q.size(), ErrorCode::kContract, "distributions differ in support size");
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    require(p[i] >= 0.0 && q[i] >= 0.0, ErrorCode::kContract, "negative probability");
    if (p[i] == 0.0) continue;
    require(q[i] > 0.0, ErrorCode::kContract, "q has zero mass where p does not; smooth q first");
    total += p[i] * std::log(p[i] / q[i]);
  }
  // Round-off can leave tiny negatives when p == q.
  return std::max(total, 0.0);
}

namespace {

std::vector<std::uint16_t> bigram_set(std::string_view s) {
  std::vector<std::uint16_t> out;
  out.reserve(s.size());
  for (std::size_t i = 0; i + 1 < s.size(); ++i)
    out.push_back(static_cast<std::uint16_t>((static_cast<unsigned char>(s[i]) << 8) |
                                             static_cast<unsigned char>(s[i + 1])));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace

double jaccard_bigrams(std::string_view a, std::string_view b) {
  require(a.size() >= 2 && b.size() >= 2, ErrorCode::kData,
          "Jaccard over bigrams needs strings of length >= 2");
  const auto sa = bigram_set(a);
  const auto sb = bigram_set(b);
  std::size_t common = 0;
  auto ia = sa.begin();
  auto ib = sb.begin();
  while (ia != sa.end() && ib != sb.end()) {
    if (*ia < *ib) {
      ++ia;
    } else if (*ib < *ia) {
      ++ib;
    } else {
      ++common;
      ++ia;
      ++ib;
    }
  }
  const std::size_t uni = sa.size() + sb.size() - common;
  return static_cast<double>(common) / static_cast<double>(uni);
}

std::size_t edit_distance(std::string_view a, std::string_view b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<std::size_t> row(b.size() + 1);
  std::iota(row.begin(), row.end(), std::size_t{0});
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

}  // namespace pkdga
