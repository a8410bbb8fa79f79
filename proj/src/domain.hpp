#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pkdga {

using TokenId = std::uint8_t;
using Date = std::chrono::year_month_day;

inline constexpr std::string_view kDefaultAlphabet = "abcdefghijklmnopqrstuvwxyz0123456789-";
inline constexpr std::string_view kDefaultTld = "com";
inline constexpr std::size_t kMaxLabelLength = 63;
inline constexpr std::size_t kMaxNameLength = 253;
inline constexpr std::size_t kMinEpisodeLength = 7;
inline constexpr std::size_t kMaxEpisodeLength = 24;
inline constexpr std::size_t kDefaultEpisodeLength = 12;

// The action alphabet. Index n (== size()) is reserved for the start marker,
// which the policy may read but never emit.
class TokenDict {
 public:
  TokenDict();
  explicit TokenDict(std::string_view tokens);

  std::size_t size() const noexcept { return tokens_.size(); }
  TokenId start_marker() const noexcept { return static_cast<TokenId>(tokens_.size()); }
  std::string_view tokens() const noexcept { return tokens_; }

  char token(TokenId id) const;
  std::optional<TokenId> index_of(char c) const noexcept;
  // Index of '-' if the dictionary contains it.
  std::optional<TokenId> hyphen() const noexcept { return index_of('-'); }

  std::vector<TokenId> tokenize(std::string_view text) const;
  std::string detokenize(std::span<const TokenId> ids) const;

  friend bool operator==(const TokenDict& a, const TokenDict& b) { return a.tokens_ == b.tokens_; }

 private:
  std::string tokens_;
  std::array<std::int16_t, 256> lookup_{};
};

// Calendar helpers. Dates are proleptic Gregorian, ISO "YYYY-MM-DD".
std::int64_t days_since_epoch(const Date& date);
Date date_from_days(std::int64_t days);
Date parse_date(std::string_view text);
std::string format_date(const Date& date);

class SeedSpace {
 public:
  SeedSpace(Date start, Date end, std::size_t encoding_dim);

  const Date& start() const noexcept { return start_; }
  const Date& end() const noexcept { return end_; }
  std::size_t encoding_dim() const noexcept { return encoding_dim_; }
  bool contains(const Date& d) const;
  std::int64_t span_days() const;  // inclusive day count
  Date date_at(std::int64_t offset) const;

 private:
  Date start_;
  Date end_;
  std::size_t encoding_dim_;
};

struct SeedEncoding {
  std::vector<double> vec;  // one-hot, dimension n
  std::uint64_t rng_seed = 0;
  std::size_t hot_index = 0;
};

// One-hot at days_since_epoch mod n; rng_seed = days_since_epoch.
// Throws kRange when the date lies outside the seed space.
SeedEncoding encode_seed(const Date& date, const TokenDict& dict, const SeedSpace& space);

// s_t: the seed plus the tokens produced so far.
struct State {
  std::vector<double> seed_vec;
  std::vector<TokenId> prefix;
  std::size_t t() const noexcept { return prefix.size(); }
};

// A generated second-level label y_1..y_T.
class DomainSequence {
 public:
  // Validates charset, length and hyphen placement; throws kData otherwise.
  static DomainSequence from_tokens(std::span<const TokenId> ids, const TokenDict& dict);
  static DomainSequence from_string(std::string_view core);

  const std::string& core() const noexcept { return core_; }
  std::size_t length() const noexcept { return core_.size(); }
  friend bool operator==(const DomainSequence&, const DomainSequence&) = default;

 private:
  explicit DomainSequence(std::string core) : core_(std::move(core)) {}
  std::string core_;
};

bool is_allowed_tld(std::string_view tld);

// "3ld.core.tld" or "core.tld". Throws kAssembly on an unknown TLD or an
// over-long result.
std::string assemble_fqdn(const DomainSequence& core, std::string_view tld = kDefaultTld,
                          std::optional<std::string_view> third_level = std::nullopt);

// LDH labels of 1..63 chars with no edge hyphen, total length <= 253.
bool validate_domain(std::string_view name);

// True when `label` could be a single LDH label.
bool validate_label(std::string_view label);

// The registrable label of a name: "b" for "a.b.com", "bbc" for "bbc.co.uk",
// the whole input when there is no dot.
std::string_view registrable_label(std::string_view name);
std::string_view tld_of(std::string_view name);
std::size_t subdomain_count(std::string_view name);

// Newline-delimited corpus: lowercased, '#' comments and blanks skipped.
std::vector<std::string> read_lines(const std::filesystem::path& path);
void write_lines(const std::filesystem::path& path, std::span<const std::string> lines);

}  // namespace pkdga
