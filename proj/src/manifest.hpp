#pragma once

// Run manifest: the effective config, the master seed, digests of every
// input file, tool version and start time. Written before any result file.

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "config.hpp"

namespace pkdga {

inline constexpr std::string_view kToolVersion = "1.0.0";

std::string sha256_hex(std::string_view bytes);
std::string file_sha256(const std::filesystem::path& path);

struct RunManifest {
  std::string command;
  Config config;
  std::vector<std::pair<std::string, std::filesystem::path>> inputs;  // (role, path)
};

// Text in config syntax; the manifest.* lines are ignored when it is loaded
// back as a config.
std::string manifest_text(const RunManifest& m);
void write_manifest(const std::filesystem::path& out_dir, const RunManifest& m);

}  // namespace pkdga
