#include <gtest/gtest.h>

#include <array>
#include <set>

#include "baselines.hpp"
#include "test_util.hpp"

namespace pkdga {
namespace {

// Hand-written recurrence, independent of the Lcg class.
std::uint64_t step(std::uint64_t x) { return (1103515245ULL * x + 12345ULL) & 0x7fffffffULL; }
std::uint64_t draw(std::uint64_t x) { return x >> 16; }

TEST(Baselines, LcgFirstStep) {
  Lcg lcg(1);
  EXPECT_EQ(lcg.next(), 1103527590u);
  EXPECT_EQ(step(1), 1103527590u);
  std::uint64_t x = 1;
  for (int i = 0; i < 1000; ++i) {
    x = step(x);
    if (i > 0) {
      EXPECT_EQ(lcg.next(), x);
    }
  }
}

TEST(Baselines, KrakenFollowsRecurrence) {
  const auto out = kraken_generate(7, 3);
  ASSERT_EQ(out.size(), 3u);
  std::uint64_t x = 7;
  for (const auto& d : out) {
    x = step(x);
    const std::size_t len = 6 + draw(x) % 6;
    std::string expect;
    for (std::size_t i = 0; i < len; ++i) {
      x = step(x);
      expect.push_back(static_cast<char>('a' + draw(x) % 26));
    }
    EXPECT_EQ(d.core(), expect);
    EXPECT_TRUE(validate_domain(assemble_fqdn(d)));
  }
  EXPECT_EQ(kraken_generate(7, 3), out);
  EXPECT_NE(kraken_generate(8, 3), out);
}

TEST(Baselines, KrakenLetterFrequencyIsNearUniform) {
  std::array<double, 26> counts{};
  double total = 0.0;
  for (const auto& d : kraken_generate(2024, 20000)) {
    for (char c : d.core()) {
      counts[c - 'a'] += 1.0;
      total += 1.0;
    }
    if (total >= 100000) break;
  }
  ASSERT_GE(total, 100000.0);
  double chi2 = 0.0;
  const double expected = total / 26.0;
  for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
  // Upper 0.001 quantile of chi-square with 25 degrees of freedom.
  EXPECT_LT(chi2, 52.62);
}

TEST(Baselines, GoziSingleWord) {
  WordDict dict(std::vector<std::string>{"abc"});
  for (const auto& d : gozi_generate(dict, 3, 5, {2, 2})) EXPECT_EQ(d.core(), "abcabc");
}

TEST(Baselines, GoziFollowsIndexOracle) {
  WordDict dict(std::vector<std::string>{"one", "two"});
  const auto out = gozi_generate(dict, 11, 20);
  std::uint64_t x = 11;
  for (const auto& d : out) {
    x = step(x);
    const std::size_t k = 2 + draw(x) % 3;
    std::string expect;
    for (std::size_t w = 0; w < k; ++w) {
      x = step(x);
      expect += draw(x) % 2 == 0 ? "one" : "two";
    }
    EXPECT_EQ(d.core(), expect);
  }
  EXPECT_EQ(gozi_generate(dict, 11, 20), out);
}

TEST(Baselines, SuppoboxExamples) {
  WordDict sun(std::vector<std::string>{"sun"}), set(std::vector<std::string>{"set"});
  EXPECT_EQ(suppobox_generate(sun, set, 1, 1).front().core(), "sunset");
  WordDict a(std::vector<std::string>{"red", "blue"}), b(std::vector<std::string>{"fox", "owl"});
  const auto out = suppobox_generate(a, b, 99, 1000);
  std::set<std::string> seen;
  for (const auto& d : out) seen.insert(d.core());
  EXPECT_EQ(seen, (std::set<std::string>{"redfox", "redowl", "bluefox", "blueowl"}));
  EXPECT_EQ(suppobox_generate(a, b, 99, 1000), out);
}

TEST(Baselines, EmptyDictionaryRejected) {
  EXPECT_PKDGA_ERROR(WordDict(std::vector<std::string>{}), ErrorCode::kData);
  EXPECT_PKDGA_ERROR(WordDict(std::vector<std::string>{"ok", "not ok"}), ErrorCode::kData);
}

TEST(Baselines, OutputsAreValidDomains) {
  const auto words = WordDict::load(test::data_dir() / "words.txt");
  const auto [d1, d2] = words.split();
  for (const auto& d : kraken_generate(5, 5000)) ASSERT_TRUE(validate_domain(assemble_fqdn(d)));
  for (const auto& d : gozi_generate(words, 5, 5000)) ASSERT_TRUE(validate_domain(assemble_fqdn(d)));
  for (const auto& d : suppobox_generate(d1, d2, 5, 5000)) ASSERT_TRUE(validate_domain(assemble_fqdn(d)));
}

}  // namespace
}  // namespace pkdga
