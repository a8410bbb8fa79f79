#pragma once

// "PKDG" container shared by policy and detector checkpoints.
//
//   magic      4 bytes  "PKDG"
//   version    u16      kContainerVersion
//   header     4 x u32  N_l, d_e, d_h, d_y (zeros where meaningless)
//   count      u32      number of entries
//   entry      u32 name length, name bytes, u32 payload length, payload
//
// Integers are little-endian. Tensor payloads are row-major little-endian
// IEEE-754 binary32; other payloads are kind-specific byte blobs.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "policy.hpp"

namespace pkdga {

inline constexpr std::uint16_t kContainerVersion = 1;

struct ContainerHeader {
  std::uint32_t layers = 0;
  std::uint32_t embed_dim = 0;
  std::uint32_t hidden_dim = 0;
  std::uint32_t output_dim = 0;
  friend bool operator==(const ContainerHeader&, const ContainerHeader&) = default;
};

struct Container {
  ContainerHeader header;
  std::vector<std::pair<std::string, std::string>> entries;

  void add(std::string name, std::string payload) {
    entries.emplace_back(std::move(name), std::move(payload));
  }
  // Throws kData when absent.
  const std::string& get(std::string_view name) const;
  bool has(std::string_view name) const;
};

std::string encode_container(const Container& c);
Container decode_container(std::string_view bytes);

void write_file(const std::filesystem::path& path, std::string_view bytes);
std::string read_file(const std::filesystem::path& path);

std::string pack_floats(std::span<const float> values);
std::vector<float> unpack_floats(std::string_view bytes);

Container policy_to_container(const PolicyParams& p);
PolicyParams policy_from_container(const Container& c);

void save_policy(const std::filesystem::path& path, const PolicyParams& p);
PolicyParams load_policy(const std::filesystem::path& path);

}  // namespace pkdga
