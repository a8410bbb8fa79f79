#include <gtest/gtest.h>

#include <fstream>

#include "domain.hpp"
#include "rng.hpp"
#include "test_util.hpp"

namespace pkdga {
namespace {

using namespace std::chrono_literals;

// Independent day count: whole years, then whole months, then days.
std::int64_t oracle_days(int year, int month, int day) {
  auto leap = [](int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; };
  static constexpr int kMonthDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  std::int64_t days = 0;
  for (int y = 1970; y < year; ++y) days += leap(y) ? 366 : 365;
  for (int m = 1; m < month; ++m) days += kMonthDays[m - 1] + (m == 2 && leap(year) ? 1 : 0);
  return days + day - 1;
}

SeedSpace wide_space(const TokenDict& dict) {
  return SeedSpace(Date{1970y / 1 / 1}, Date{2099y / 12 / 31}, dict.size());
}

TEST(DomainModel, DefaultDictionaryHasThirtySevenTokens) {
  TokenDict dict;
  EXPECT_EQ(dict.size(), 37u);
  EXPECT_EQ(dict.start_marker(), 37);
  EXPECT_EQ(dict.token(0), 'a');
  EXPECT_EQ(*dict.hyphen(), 36);
  EXPECT_FALSE(dict.index_of('_').has_value());
}

TEST(DomainModel, EncodeSeedEpoch) {
  TokenDict dict;
  const auto enc = encode_seed(Date{1970y / 1 / 1}, dict, wide_space(dict));
  EXPECT_EQ(enc.hot_index, 0u);
  EXPECT_EQ(enc.rng_seed, 0u);
  ASSERT_EQ(enc.vec.size(), dict.size());
  EXPECT_EQ(enc.vec[0], 1.0);
}

TEST(DomainModel, EncodeSeedNextDay) {
  TokenDict dict;
  const auto enc = encode_seed(Date{1970y / 1 / 2}, dict, wide_space(dict));
  EXPECT_EQ(enc.hot_index, 1u);
  EXPECT_EQ(enc.rng_seed, 1u);
}

TEST(DomainModel, EncodeSeedMatchesCalendarOracle) {
  TokenDict dict;
  const auto space = wide_space(dict);
  const auto enc = encode_seed(Date{2016y / 8 / 1}, dict, space);
  const std::int64_t days = oracle_days(2016, 8, 1);
  EXPECT_EQ(enc.rng_seed, static_cast<std::uint64_t>(days));
  EXPECT_EQ(enc.hot_index, static_cast<std::size_t>(days % 37));
  // Sweep: one-hot at the oracle index for a run of dates across leap years.
  for (int y : {1999, 2000, 2004, 2023, 2024}) {
    for (int m = 1; m <= 12; ++m) {
      const Date d{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                   std::chrono::day{28}};
      const auto e = encode_seed(d, dict, space);
      const auto expect = oracle_days(y, m, 28);
      EXPECT_EQ(e.rng_seed, static_cast<std::uint64_t>(expect));
      double sum = 0.0;
      for (double v : e.vec) sum += v;
      EXPECT_EQ(sum, 1.0);
      EXPECT_EQ(e.vec[static_cast<std::size_t>(expect % 37)], 1.0);
    }
  }
}

TEST(DomainModel, EncodeSeedDeterministicAndRangeChecked) {
  TokenDict dict;
  SeedSpace space(Date{2020y / 1 / 1}, Date{2020y / 12 / 31}, dict.size());
  const auto a = encode_seed(Date{2020y / 6 / 15}, dict, space);
  const auto b = encode_seed(Date{2020y / 6 / 15}, dict, space);
  EXPECT_EQ(a.vec, b.vec);
  EXPECT_EQ(a.rng_seed, b.rng_seed);
  EXPECT_PKDGA_ERROR(encode_seed(Date{2021y / 1 / 1}, dict, space), ErrorCode::kRange);
  EXPECT_PKDGA_ERROR(encode_seed(Date{2019y / 12 / 31}, dict, space), ErrorCode::kRange);
}

TEST(DomainModel, DateParsingRoundTrip) {
  EXPECT_EQ(format_date(parse_date("2016-08-01")), "2016-08-01");
  EXPECT_EQ(days_since_epoch(parse_date("2000-03-01")), oracle_days(2000, 3, 1));
  EXPECT_EQ(date_from_days(oracle_days(2024, 2, 29)), (Date{2024y / 2 / 29}));
  EXPECT_PKDGA_ERROR(parse_date("2023-02-29"), ErrorCode::kData);
  EXPECT_PKDGA_ERROR(parse_date("20230101"), ErrorCode::kData);
}

TEST(DomainModel, AssembleFqdn) {
  const auto core = DomainSequence::from_string("abcdef");
  EXPECT_EQ(assemble_fqdn(core), "abcdef.com");
  EXPECT_EQ(assemble_fqdn(core, "com", "scholar"), "scholar.abcdef.com");
  const auto longest = DomainSequence::from_string(std::string(63, 'a'));
  EXPECT_PKDGA_ERROR(assemble_fqdn(longest, "info", std::string(200, 'b')), ErrorCode::kAssembly);
  EXPECT_PKDGA_ERROR(assemble_fqdn(core, "notatld"), ErrorCode::kAssembly);
}

TEST(DomainModel, AssembleRejectsOverlongNameOfValidLabels) {
  const auto core = DomainSequence::from_string(std::string(63, 'a'));
  const std::string third = std::string(63, 'b') + "." + std::string(63, 'c') + "." + std::string(60, 'd');
  EXPECT_PKDGA_ERROR(assemble_fqdn(core, "info", third), ErrorCode::kAssembly);
}

TEST(DomainModel, ValidateDomain) {
  EXPECT_TRUE(validate_domain("abc.com"));
  EXPECT_FALSE(validate_domain("-abc.com"));
  EXPECT_FALSE(validate_domain("abc-.com"));
  EXPECT_FALSE(validate_domain("a_b.com"));
  EXPECT_FALSE(validate_domain(""));
  EXPECT_FALSE(validate_domain("abc..com"));
  EXPECT_FALSE(validate_domain("ABC.com"));
  EXPECT_TRUE(validate_domain(std::string(63, 'a') + ".com"));
  EXPECT_FALSE(validate_domain(std::string(64, 'a') + ".com"));
  std::string name;
  for (int i = 0; i < 4; ++i) name += std::string(62, 'a') + ".";
  name += "c";  // 4 * 63 + 1 = 253
  EXPECT_TRUE(validate_domain(name));
  EXPECT_FALSE(validate_domain(name + "c"));
}

TEST(DomainModel, DomainSequenceValidation) {
  TokenDict dict;
  EXPECT_EQ(DomainSequence::from_tokens(dict.tokenize("a-1"), dict).core(), "a-1");
  EXPECT_PKDGA_ERROR(DomainSequence::from_string("-ab"), ErrorCode::kData);
  EXPECT_PKDGA_ERROR(DomainSequence::from_string(""), ErrorCode::kData);
  EXPECT_PKDGA_ERROR(DomainSequence::from_string(std::string(64, 'x')), ErrorCode::kData);
  EXPECT_PKDGA_ERROR(dict.tokenize("a.b"), ErrorCode::kData);
}

TEST(DomainModel, TokenizeRoundTrip) {
  TokenDict dict;
  Rng rng(99);
  for (int i = 0; i < 500; ++i) {
    std::string core;
    const std::size_t len = 1 + rng.below(63);
    for (std::size_t k = 0; k < len; ++k) core.push_back(dict.token(static_cast<TokenId>(rng.below(37))));
    EXPECT_EQ(dict.detokenize(dict.tokenize(core)), core);
  }
}

TEST(DomainModel, RegistrableLabel) {
  EXPECT_EQ(registrable_label("a.b.com"), "b");
  EXPECT_EQ(registrable_label("bbc.co.uk"), "bbc");
  EXPECT_EQ(registrable_label("news.bbc.co.uk"), "bbc");
  EXPECT_EQ(registrable_label("plain"), "plain");
  EXPECT_EQ(tld_of("a.b.com"), "com");
  EXPECT_EQ(subdomain_count("a.b.com"), 1u);
  EXPECT_EQ(subdomain_count("bbc.co.uk"), 0u);
}

TEST(DomainModel, CustomDictionaryRejectsBadTokens) {
  EXPECT_PKDGA_ERROR(TokenDict("a"), ErrorCode::kContract);
  EXPECT_PKDGA_ERROR(TokenDict("aa"), ErrorCode::kContract);
  EXPECT_PKDGA_ERROR(TokenDict("a."), ErrorCode::kContract);
}

TEST(DomainModel, ReadLinesSkipsCommentsAndLowercases) {
  test::TempDir dir("lines");
  const auto path = dir / "list.txt";
  {
    std::ofstream out(path);
    out << "# header\n\nExample.COM\n  spaced.net  \n#tail\n";
  }
  const auto lines = read_lines(path);
  EXPECT_EQ(lines, (std::vector<std::string>{"example.com", "spaced.net"}));
  EXPECT_PKDGA_ERROR(read_lines(dir / "missing.txt"), ErrorCode::kIo);
}

}  // namespace
}  // namespace pkdga
