#pragma once

// Flat "section.key = value" configuration. Lines starting with '#' are
// comments. Keys under "manifest." are run metadata and ignored on load, so
// a manifest file doubles as the config that reproduces its run.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pkdga {

class Config {
 public:
  Config() = default;

  // Throws kUsage on a malformed line or an unknown key.
  static Config parse(std::string_view text);
  static Config load(const std::filesystem::path& path);

  // Throws kUsage for an unknown key.
  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const { return values_.contains(key); }

  // Effective value: explicit setting, else the built-in default.
  std::string get(const std::string& key) const;
  std::int64_t get_int(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  std::size_t get_size(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<std::string> get_list(const std::string& key) const;  // comma separated

  // Every known key with its effective value, sorted.
  std::string to_text() const;
  const std::map<std::string, std::string>& explicit_values() const { return values_; }

  static const std::map<std::string, std::string>& defaults();

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace pkdga
