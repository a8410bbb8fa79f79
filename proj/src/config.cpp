#include "config.hpp"

#include <cerrno>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <cmath>
#include <sstream>

#include "domain.hpp"
#include "errors.hpp"

namespace pkdga {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

const std::map<std::string, std::string>& Config::defaults() {
  static const std::map<std::string, std::string> d = {
      {"run.seed", "1"},
      {"run.threads", "0"},
      {"data.dir", ""},
      {"data.benign", ""},
      {"data.words", ""},
      {"data.third_level", ""},
      {"seed.start", "2020-01-01"},
      {"seed.end", "2029-12-31"},
      {"policy.layers", "1"},
      {"policy.embed", "32"},
      {"policy.hidden", "64"},
      {"train.lr", "0.01"},
      {"train.batch", "16"},
      {"train.mc", "5"},
      {"train.length", "12"},
      {"train.epochs", "60"},
      {"train.reward_mode", "binary"},
      {"train.full_enumeration", "false"},
      {"train.max_norm", "0"},
      {"train.tld", "com"},
      {"env.detector", ""},
      {"env.threshold", ""},
      {"env.budget", "1000000"},
      {"env.audit_log", "false"},
      {"detector.kind", "lstm"},
      {"detector.dga", "kraken"},
      {"detector.samples", "5000"},
      {"detector.split", "0.8"},
      {"detector.references", "256"},
      {"detector.logistic_iterations", "500"},
      {"detector.trees", "25"},
      {"detector.depth", "12"},
      {"detector.min_repeats", "4"},
      {"detector.embed", "16"},
      {"detector.hidden", "32"},
      {"detector.layers", "1"},
      {"detector.epochs", "5"},
      {"detector.batch", "32"},
      {"detector.lr", "0.01"},
      {"generate.policy", ""},
      {"generate.date", ""},
      {"eval.dga", "kraken"},
      {"eval.policy", ""},
      {"eval.samples", "1000"},
      {"matrix.dgas", "kraken,gozi,suppobox,pkdga"},
      {"matrix.detectors", "statistics,fanci,wordgraph,lstm,bilstm"},
      {"matrix.samples", "2000"},
      {"game.stages", "3"},
      {"game.reward_floor", "0"},
      {"game.eval_samples", "1000"},
      {"game.detector", "bilstm"},
      {"bench.batches", "1,8,16,32,64,128"},
      {"bench.policy", ""},
  };
  return d;
}

Config Config::parse(std::string_view text) {
  Config c;
  std::size_t line_no = 0;
  std::size_t begin = 0;
  while (begin <= text.size()) {
    const auto nl = text.find('\n', begin);
    const auto end = nl == std::string_view::npos ? text.size() : nl;
    const std::string line = trim(text.substr(begin, end - begin));
    ++line_no;
    begin = end + 1;
    if (line.empty() || line.front() == '#') {
      if (nl == std::string_view::npos) break;
      continue;
    }
    const auto eq = line.find('=');
    require(eq != std::string::npos, ErrorCode::kUsage,
            "config line " + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key.rfind("manifest.", 0) != 0) c.set(key, value);
    if (nl == std::string_view::npos) break;
  }
  return c;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::kUsage, "cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void Config::set(const std::string& key, const std::string& value) {
  require(defaults().contains(key), ErrorCode::kUsage, "unknown config key '" + key + "'");
  values_[key] = value;
}

std::string Config::get(const std::string& key) const {
  if (auto it = values_.find(key); it != values_.end()) return it->second;
  auto it = defaults().find(key);
  require(it != defaults().end(), ErrorCode::kUsage, "unknown config key '" + key + "'");
  return it->second;
}

std::int64_t Config::get_int(const std::string& key) const {
  const auto s = get(key);
  std::int64_t v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  require(ec == std::errc() && p == s.data() + s.size(), ErrorCode::kUsage,
          key + ": expected an integer, got '" + s + "'");
  return v;
}

std::uint64_t Config::get_u64(const std::string& key) const {
  const auto s = get(key);
  std::uint64_t v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  require(ec == std::errc() && p == s.data() + s.size(), ErrorCode::kUsage,
          key + ": expected a non-negative integer, got '" + s + "'");
  return v;
}

std::size_t Config::get_size(const std::string& key) const {
  return static_cast<std::size_t>(get_u64(key));
}

double Config::get_double(const std::string& key) const {
  const auto s = get(key);
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(s.c_str(), &end);
  require(!s.empty() && end == s.c_str() + s.size() && errno == 0 && std::isfinite(v),
          ErrorCode::kUsage, key + ": expected a number, got '" + s + "'");
  return v;
}

bool Config::get_bool(const std::string& key) const {
  const auto s = get(key);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  fail(ErrorCode::kUsage, key + ": expected true or false, got '" + s + "'");
}

std::vector<std::string> Config::get_list(const std::string& key) const {
  std::vector<std::string> out;
  std::stringstream ss(get(key));
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string Config::to_text() const {
  std::ostringstream os;
  for (const auto& [k, d] : defaults()) os << k << " = " << get(k) << '\n';
  return os.str();
}

}  // namespace pkdga
