#include "baselines.hpp"

#include "errors.hpp"

namespace pkdga {

WordDict::WordDict(std::vector<std::string> words) : words_(std::move(words)) {
  require(!words_.empty(), ErrorCode::kData, "word dictionary is empty");
  for (const auto& w : words_)
    require(validate_label(w), ErrorCode::kData, "invalid dictionary word '" + w + "'");
}

WordDict WordDict::load(const std::filesystem::path& path) { return WordDict(read_lines(path)); }

std::pair<WordDict, WordDict> WordDict::split() const {
  require(words_.size() >= 2, ErrorCode::kData, "cannot split a one-word dictionary");
  std::vector<std::string> a, b;
  for (std::size_t i = 0; i < words_.size(); ++i) (i % 2 == 0 ? a : b).push_back(words_[i]);
  return {WordDict(std::move(a)), WordDict(std::move(b))};
}

std::vector<DomainSequence> kraken_generate(std::uint64_t seed, std::size_t count,
                                            LengthRange len) {
  require(count >= 1, ErrorCode::kContract, "count must be >= 1");
  require(len.min >= 1 && len.min <= len.max && len.max <= kMaxLabelLength, ErrorCode::kContract,
          "invalid length range");
  Lcg lcg(seed);
  std::vector<DomainSequence> out;
  out.reserve(count);
  const std::uint64_t span = len.max - len.min + 1;
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t n = len.min + lcg.below(span);
    std::string core(n, 'a');
    for (char& ch : core) ch = static_cast<char>('a' + lcg.below(26));
    out.push_back(DomainSequence::from_string(core));
  }
  return out;
}

std::vector<DomainSequence> gozi_generate(const WordDict& dict, std::uint64_t seed,
                                          std::size_t count, LengthRange words_per_name) {
  require(count >= 1, ErrorCode::kContract, "count must be >= 1");
  require(words_per_name.min >= 1 && words_per_name.min <= words_per_name.max,
          ErrorCode::kContract, "invalid word-count range");
  Lcg lcg(seed);
  std::vector<DomainSequence> out;
  out.reserve(count);
  const std::uint64_t span = words_per_name.max - words_per_name.min + 1;
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t k = words_per_name.min + lcg.below(span);
    std::string core;
    for (std::size_t w = 0; w < k; ++w) core += dict[lcg.below(dict.size())];
    out.push_back(DomainSequence::from_string(core));
  }
  return out;
}

std::vector<DomainSequence> suppobox_generate(const WordDict& first, const WordDict& second,
                                              std::uint64_t seed, std::size_t count) {
  require(count >= 1, ErrorCode::kContract, "count must be >= 1");
  Lcg lcg(seed);
  std::vector<DomainSequence> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::string core = first[lcg.below(first.size())];
    core += second[lcg.below(second.size())];
    out.push_back(DomainSequence::from_string(core));
  }
  return out;
}

}  // namespace pkdga
