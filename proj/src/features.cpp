#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "detectors.hpp"
#include "errors.hpp"

namespace pkdga {

namespace {

constexpr std::array<std::string_view, kFeatureCount> kNames = {
    "label_length",           // [1, 63]
    "subdomain_count",        // [0, 126]
    "digit_ratio",            // [0, 1]
    "vowel_ratio",            // [0, 1]
    "consonant_ratio",        // [0, 1]
    "hyphen_count",           // [0, 61]
    "max_digit_run",          // [0, 63]
    "max_consonant_run",      // [0, 63]
    "unique_char_count",      // [1, 37]
    "char_entropy",           // [0, log2 37] bits
    "bigram_entropy",         // [0, log2 62] bits
    "trigram_entropy",        // [0, log2 61] bits
    "benign_bigram_mean_freq",   // [0, 1]
    "benign_trigram_mean_freq",  // [0, 1]
    "repeated_char_ratio",    // [0, 1]
    "hex_char_ratio",         // [0, 1]
    "dictionary_word_coverage",      // [0, 1]
    "longest_dictionary_word_ratio", // [0, 1]
    "alphabet_switch_count",  // [0, 62]
    "first_char_is_digit",    // {0, 1}
    "tld_allowlisted",        // {0, 1}
};

bool is_vowel(char c) { return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u'; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_letter(char c) { return c >= 'a' && c <= 'z'; }
bool is_consonant(char c) { return is_letter(c) && !is_vowel(c); }

template <typename Pred>
std::size_t max_run(std::string_view s, Pred pred) {
  std::size_t best = 0, cur = 0;
  for (char c : s) {
    cur = pred(c) ? cur + 1 : 0;
    best = std::max(best, cur);
  }
  return best;
}

double ngram_entropy(std::string_view s, std::size_t n) {
  if (s.size() < n) return 0.0;
  std::map<std::string_view, std::size_t> counts;
  for (std::size_t i = 0; i + n <= s.size(); ++i) ++counts[s.substr(i, n)];
  const double total = static_cast<double>(s.size() - n + 1);
  double h = 0.0;
  for (const auto& [g, k] : counts) {
    const double p = static_cast<double>(k) / total;
    h -= p * std::log2(p);
  }
  return h;
}

double mean_ngram_freq(std::string_view s, std::size_t n,
                       const std::unordered_map<std::string, double>& table) {
  if (s.size() < n || table.empty()) return 0.0;
  double total = 0.0;
  std::string key;
  for (std::size_t i = 0; i + n <= s.size(); ++i) {
    key.assign(s.substr(i, n));
    auto it = table.find(key);
    if (it != table.end()) total += it->second;
  }
  return total / static_cast<double>(s.size() - n + 1);
}

std::size_t longest_word_at(std::string_view s, std::size_t i, const FeatureContext& ctx) {
  std::string key;
  const std::size_t limit = std::min(ctx.max_word_length, s.size() - i);
  for (std::size_t len = limit; len >= 3; --len) {
    key.assign(s.substr(i, len));
    if (ctx.words.contains(key)) return len;
  }
  return 0;
}

void add_counts(std::unordered_map<std::string, double>& table, std::string_view s,
                std::size_t n, double& total) {
  for (std::size_t i = 0; i + n <= s.size(); ++i) {
    table[std::string(s.substr(i, n))] += 1.0;
    total += 1.0;
  }
}

}  // namespace

const std::array<std::string_view, kFeatureCount>& feature_names() { return kNames; }

FeatureContext FeatureContext::build(std::span<const std::string> benign_cores,
                                     std::span<const std::string> words) {
  FeatureContext ctx;
  double bi_total = 0.0, tri_total = 0.0;
  for (const auto& core : benign_cores) {
    add_counts(ctx.bigram_freq, core, 2, bi_total);
    add_counts(ctx.trigram_freq, core, 3, tri_total);
  }
  for (auto& [k, v] : ctx.bigram_freq) v /= bi_total;
  for (auto& [k, v] : ctx.trigram_freq) v /= tri_total;
  for (const auto& w : words) {
    if (w.size() < 3) continue;
    ctx.words.insert(w);
    ctx.max_word_length = std::max(ctx.max_word_length, w.size());
  }
  return ctx;
}

FeatureVector extract_features(std::string_view domain, const FeatureContext& ctx) {
  require(validate_domain(domain), ErrorCode::kData, "invalid domain '" + std::string(domain) + "'");
  const std::string_view core = registrable_label(domain);
  const double len = static_cast<double>(core.size());
  FeatureVector f{};
  std::size_t digits = 0, vowels = 0, consonants = 0, hyphens = 0, hex = 0, switches = 0;
  std::array<std::size_t, 256> counts{};
  for (std::size_t i = 0; i < core.size(); ++i) {
    const char c = core[i];
    digits += is_digit(c);
    vowels += is_vowel(c);
    consonants += is_consonant(c);
    hyphens += c == '-';
    hex += is_digit(c) || (c >= 'a' && c <= 'f');
    ++counts[static_cast<unsigned char>(c)];
    if (i > 0 && ((is_letter(c) && is_digit(core[i - 1])) || (is_digit(c) && is_letter(core[i - 1]))))
      ++switches;
  }
  std::size_t unique = 0, repeated = 0;
  double entropy = 0.0;
  for (std::size_t k : counts) {
    if (k == 0) continue;
    ++unique;
    if (k >= 2) repeated += k;
    const double p = static_cast<double>(k) / len;
    entropy -= p * std::log2(p);
  }
  std::size_t covered = 0, longest = 0;
  if (!ctx.words.empty()) {
    for (std::size_t i = 0; i < core.size(); ++i) longest = std::max(longest, longest_word_at(core, i, ctx));
    for (std::size_t i = 0; i < core.size();) {
      const std::size_t w = longest_word_at(core, i, ctx);
      if (w > 0) {
        covered += w;
        i += w;
      } else {
        ++i;
      }
    }
  }
  f[0] = len;
  f[1] = static_cast<double>(subdomain_count(domain));
  f[2] = digits / len;
  f[3] = vowels / len;
  f[4] = consonants / len;
  f[5] = static_cast<double>(hyphens);
  f[6] = static_cast<double>(max_run(core, is_digit));
  f[7] = static_cast<double>(max_run(core, is_consonant));
  f[8] = static_cast<double>(unique);
  f[9] = std::abs(entropy);
  f[10] = ngram_entropy(core, 2);
  f[11] = ngram_entropy(core, 3);
  f[12] = mean_ngram_freq(core, 2, ctx.bigram_freq);
  f[13] = mean_ngram_freq(core, 3, ctx.trigram_freq);
  f[14] = repeated / len;
  f[15] = hex / len;
  f[16] = covered / len;
  f[17] = longest / len;
  f[18] = static_cast<double>(switches);
  f[19] = is_digit(core.front()) ? 1.0 : 0.0;
  const auto tld = tld_of(domain);
  f[20] = !tld.empty() && is_allowed_tld(tld) ? 1.0 : 0.0;
  return f;
}

FeatureVector extract_features(std::string_view domain) {
  static const FeatureContext empty;
  return extract_features(domain, empty);
}

std::string features_csv(std::span<const std::string> domains, const FeatureContext& ctx) {
  std::ostringstream out;
  out.precision(17);
  for (std::size_t i = 0; i < kNames.size(); ++i) out << (i ? "," : "") << kNames[i];
  out << '\n';
  for (const auto& d : domains) {
    const auto f = extract_features(d, ctx);
    for (std::size_t i = 0; i < f.size(); ++i) out << (i ? "," : "") << f[i];
    out << '\n';
  }
  return out.str();
}

}  // namespace pkdga
