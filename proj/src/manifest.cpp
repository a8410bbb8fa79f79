#include "manifest.hpp"

#include <openssl/evp.h>

#include <array>
#include <chrono>
#include <memory>
#include <sstream>

#include "checkpoint.hpp"
#include "errors.hpp"

namespace pkdga {

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  require(ctx && EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) == 1 &&
              EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) == 1 &&
              EVP_DigestFinal_ex(ctx.get(), md.data(), &len) == 1,
          ErrorCode::kIo, "SHA-256 failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[md[i] >> 4]);
    out.push_back(kHex[md[i] & 15]);
  }
  return out;
}

std::string file_sha256(const std::filesystem::path& path) { return sha256_hex(read_file(path)); }

std::string manifest_text(const RunManifest& m) {
  const auto now = std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
  const auto days = std::chrono::floor<std::chrono::days>(now);
  const std::chrono::hh_mm_ss tod(now - days);
  char stamp[48];
  std::snprintf(stamp, sizeof stamp, "%sT%02d:%02d:%02dZ", format_date(Date(days)).c_str(),
                static_cast<int>(tod.hours().count()), static_cast<int>(tod.minutes().count()),
                static_cast<int>(tod.seconds().count()));
  std::ostringstream os;
  os << "# run manifest; load with --config to reproduce this run\n";
  os << "manifest.command = " << m.command << '\n';
  os << "manifest.tool_version = " << kToolVersion << '\n';
  os << "manifest.seed = " << m.config.get("run.seed") << '\n';
  os << "manifest.started = " << stamp << '\n';
  for (const auto& [role, path] : m.inputs) {
    os << "manifest.input." << role << ".path = " << path.string() << '\n';
    os << "manifest.input." << role << ".sha256 = " << file_sha256(path) << '\n';
  }
  os << m.config.to_text();
  return os.str();
}

void write_manifest(const std::filesystem::path& out_dir, const RunManifest& m) {
  write_file(out_dir / "manifest.txt", manifest_text(m));
}

}  // namespace pkdga
