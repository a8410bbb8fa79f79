#include "domain.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>

#include "errors.hpp"

namespace pkdga {

namespace {

constexpr std::array<std::string_view, 24> kAllowedTlds = {
    "com", "net", "org", "info", "biz", "io",  "co",   "us",     "uk",   "de", "ru", "cn",
    "xyz", "top", "online", "site", "me", "tv", "cc", "ws", "eu", "in", "jp", "fr"};

// Second-level public suffixes common enough in the bundled corpora.
constexpr std::array<std::string_view, 28> kTwoLevelSuffixes = {
    "co.uk",  "org.uk", "ac.uk",  "gov.uk", "com.au", "net.au", "org.au",
    "co.jp",  "ne.jp",  "or.jp",  "com.br", "com.cn", "net.cn", "org.cn",
    "co.in",  "co.kr",  "com.tw", "com.mx", "co.za",  "com.tr", "com.ar",
    "co.nz",  "com.sg", "com.hk", "co.id",  "com.ua", "com.vn", "com.pl"};

bool is_ldh(char c) {
  return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-';
}

}  // namespace

TokenDict::TokenDict() : TokenDict(kDefaultAlphabet) {}

TokenDict::TokenDict(std::string_view tokens) : tokens_(tokens) {
  lookup_.fill(-1);
  require(tokens_.size() >= 2, ErrorCode::kContract, "token dictionary needs at least 2 tokens");
  require(tokens_.size() <= 64, ErrorCode::kContract, "token dictionary limited to 64 tokens");
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    const auto c = static_cast<unsigned char>(tokens_[i]);
    require(is_ldh(tokens_[i]), ErrorCode::kContract,
            std::string("token outside [a-z0-9-]: ") + tokens_[i]);
    require(lookup_[c] < 0, ErrorCode::kContract, std::string("duplicate token: ") + tokens_[i]);
    lookup_[c] = static_cast<std::int16_t>(i);
  }
}

char TokenDict::token(TokenId id) const {
  require(id < tokens_.size(), ErrorCode::kContract, "token index out of range");
  return tokens_[id];
}

std::optional<TokenId> TokenDict::index_of(char c) const noexcept {
  const auto v = lookup_[static_cast<unsigned char>(c)];
  if (v < 0) return std::nullopt;
  return static_cast<TokenId>(v);
}

std::vector<TokenId> TokenDict::tokenize(std::string_view text) const {
  std::vector<TokenId> out;
  out.reserve(text.size());
  for (char c : text) {
    auto id = index_of(c);
    require(id.has_value(), ErrorCode::kData, std::string("character not in dictionary: ") + c);
    out.push_back(*id);
  }
  return out;
}

std::string TokenDict::detokenize(std::span<const TokenId> ids) const {
  std::string out;
  out.reserve(ids.size());
  for (TokenId id : ids) out.push_back(token(id));
  return out;
}

std::int64_t days_since_epoch(const Date& date) {
  require(date.ok(), ErrorCode::kData, "invalid calendar date");
  return std::chrono::sys_days(date).time_since_epoch().count();
}

Date date_from_days(std::int64_t days) {
  return Date(std::chrono::sys_days(std::chrono::days(days)));
}

Date parse_date(std::string_view text) {
  int y = 0;
  unsigned m = 0, d = 0;
  auto bad = [&] { fail(ErrorCode::kData, "expected YYYY-MM-DD, got '" + std::string(text) + "'"); };
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') bad();
  const char* s = text.data();
  if (std::from_chars(s, s + 4, y).ec != std::errc{}) bad();
  if (std::from_chars(s + 5, s + 7, m).ec != std::errc{}) bad();
  if (std::from_chars(s + 8, s + 10, d).ec != std::errc{}) bad();
  Date date{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!date.ok()) bad();
  return date;
}

std::string format_date(const Date& date) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(date.year()),
                static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()));
  return buf;
}

SeedSpace::SeedSpace(Date start, Date end, std::size_t encoding_dim)
    : start_(start), end_(end), encoding_dim_(encoding_dim) {
  require(start.ok() && end.ok(), ErrorCode::kData, "invalid seed-space date");
  require(std::chrono::sys_days(start) <= std::chrono::sys_days(end), ErrorCode::kRange,
          "seed space start after end");
  require(encoding_dim >= 2, ErrorCode::kContract, "seed encoding dimension must be >= 2");
}

bool SeedSpace::contains(const Date& d) const {
  const auto day = std::chrono::sys_days(d);
  return d.ok() && day >= std::chrono::sys_days(start_) && day <= std::chrono::sys_days(end_);
}

std::int64_t SeedSpace::span_days() const {
  return days_since_epoch(end_) - days_since_epoch(start_) + 1;
}

Date SeedSpace::date_at(std::int64_t offset) const {
  require(offset >= 0 && offset < span_days(), ErrorCode::kRange, "seed offset out of range");
  return date_from_days(days_since_epoch(start_) + offset);
}

SeedEncoding encode_seed(const Date& date, const TokenDict& dict, const SeedSpace& space) {
  require(space.encoding_dim() == dict.size(), ErrorCode::kContract,
          "seed encoding dimension must equal dictionary size");
  require(space.contains(date), ErrorCode::kRange,
          "seed date " + format_date(date) + " outside [" + format_date(space.start()) + ", " +
              format_date(space.end()) + "]");
  const std::int64_t days = days_since_epoch(date);
  const auto n = static_cast<std::int64_t>(dict.size());
  SeedEncoding enc;
  enc.hot_index = static_cast<std::size_t>(((days % n) + n) % n);
  enc.vec.assign(dict.size(), 0.0);
  enc.vec[enc.hot_index] = 1.0;
  enc.rng_seed = static_cast<std::uint64_t>(days);
  return enc;
}

DomainSequence DomainSequence::from_tokens(std::span<const TokenId> ids, const TokenDict& dict) {
  return from_string(dict.detokenize(ids));
}

DomainSequence DomainSequence::from_string(std::string_view core) {
  require(validate_label(core), ErrorCode::kData, "invalid domain core '" + std::string(core) + "'");
  return DomainSequence(std::string(core));
}

bool is_allowed_tld(std::string_view tld) {
  return std::find(kAllowedTlds.begin(), kAllowedTlds.end(), tld) != kAllowedTlds.end();
}

std::string assemble_fqdn(const DomainSequence& core, std::string_view tld,
                          std::optional<std::string_view> third_level) {
  require(is_allowed_tld(tld), ErrorCode::kAssembly, "TLD not allow-listed: " + std::string(tld));
  std::string out;
  if (third_level) {
    out.append(*third_level);
    out.push_back('.');
  }
  out.append(core.core());
  out.push_back('.');
  out.append(tld);
  require(validate_domain(out), ErrorCode::kAssembly,
          "assembled name violates DNS limits (" + std::to_string(out.size()) + " chars)");
  return out;
}

bool validate_label(std::string_view label) {
  if (label.empty() || label.size() > kMaxLabelLength) return false;
  if (label.front() == '-' || label.back() == '-') return false;
  return std::all_of(label.begin(), label.end(), is_ldh);
}

bool validate_domain(std::string_view name) {
  if (name.empty() || name.size() > kMaxNameLength) return false;
  std::size_t begin = 0;
  while (true) {
    const std::size_t dot = name.find('.', begin);
    const std::string_view label =
        name.substr(begin, dot == std::string_view::npos ? std::string_view::npos : dot - begin);
    if (!validate_label(label)) return false;
    if (dot == std::string_view::npos) return true;
    begin = dot + 1;
  }
}

namespace {

// Number of trailing labels forming the public suffix.
std::size_t suffix_labels(std::string_view name) {
  for (std::string_view s : kTwoLevelSuffixes) {
    if (name.size() > s.size() && name.ends_with(s) && name[name.size() - s.size() - 1] == '.')
      return 2;
  }
  return 1;
}

std::vector<std::string_view> split_labels(std::string_view name) {
  std::vector<std::string_view> out;
  std::size_t begin = 0;
  while (true) {
    const std::size_t dot = name.find('.', begin);
    if (dot == std::string_view::npos) {
      out.push_back(name.substr(begin));
      return out;
    }
    out.push_back(name.substr(begin, dot - begin));
    begin = dot + 1;
  }
}

}  // namespace

std::string_view registrable_label(std::string_view name) {
  const auto labels = split_labels(name);
  if (labels.size() == 1) return labels.front();
  const std::size_t suffix = std::min(suffix_labels(name), labels.size() - 1);
  return labels[labels.size() - 1 - suffix];
}

std::string_view tld_of(std::string_view name) {
  const std::size_t dot = name.rfind('.');
  return dot == std::string_view::npos ? std::string_view{} : name.substr(dot + 1);
}

std::size_t subdomain_count(std::string_view name) {
  const auto labels = split_labels(name);
  if (labels.size() == 1) return 0;
  const std::size_t suffix = std::min(suffix_labels(name), labels.size() - 1);
  return labels.size() - 1 - suffix;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::kIo, "cannot open " + path.string());
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto last = line.find_last_not_of(" \t\r");
    std::string entry = line.substr(first, last - first + 1);
    std::transform(entry.begin(), entry.end(), entry.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    out.push_back(std::move(entry));
  }
  return out;
}

void write_lines(const std::filesystem::path& path, std::span<const std::string> lines) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorCode::kIo, "cannot write " + path.string());
  for (const auto& l : lines) out << l << '\n';
}

}  // namespace pkdga
