#include "checkpoint.hpp"

#include <bit>
#include <fstream>
#include <iterator>

#include "errors.hpp"

namespace pkdga {

namespace {

constexpr std::string_view kMagic = "PKDG";

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>(v >> 8));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  std::string_view take(std::size_t n) {
    require(pos_ + n <= bytes_.size(), ErrorCode::kData, "truncated checkpoint");
    auto out = bytes_.substr(pos_, n);
    pos_ += n;
    return out;
  }
  std::uint16_t u16() {
    auto b = take(2);
    return static_cast<std::uint16_t>(static_cast<unsigned char>(b[0]) |
                                      (static_cast<unsigned char>(b[1]) << 8));
  }
  std::uint32_t u32() {
    auto b = take(4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(b[i]);
    return v;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

const std::string& Container::get(std::string_view name) const {
  for (const auto& [k, v] : entries)
    if (k == name) return v;
  fail(ErrorCode::kData, "checkpoint entry missing: " + std::string(name));
}

bool Container::has(std::string_view name) const {
  for (const auto& e : entries)
    if (e.first == name) return true;
  return false;
}

std::string encode_container(const Container& c) {
  std::string out(kMagic);
  put_u16(out, kContainerVersion);
  put_u32(out, c.header.layers);
  put_u32(out, c.header.embed_dim);
  put_u32(out, c.header.hidden_dim);
  put_u32(out, c.header.output_dim);
  put_u32(out, static_cast<std::uint32_t>(c.entries.size()));
  for (const auto& [name, payload] : c.entries) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.append(name);
    put_u32(out, static_cast<std::uint32_t>(payload.size()));
    out.append(payload);
  }
  return out;
}

Container decode_container(std::string_view bytes) {
  Reader r(bytes);
  require(r.take(4) == kMagic, ErrorCode::kData, "not a PKDG checkpoint");
  const auto version = r.u16();
  require(version == kContainerVersion, ErrorCode::kData,
          "unsupported checkpoint version " + std::to_string(version));
  Container c;
  c.header.layers = r.u32();
  c.header.embed_dim = r.u32();
  c.header.hidden_dim = r.u32();
  c.header.output_dim = r.u32();
  const auto count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name(r.take(r.u32()));
    std::string payload(r.take(r.u32()));
    c.entries.emplace_back(std::move(name), std::move(payload));
  }
  require(r.done(), ErrorCode::kData, "trailing bytes in checkpoint");
  return c;
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorCode::kIo, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  require(static_cast<bool>(out), ErrorCode::kIo, "write failed: " + path.string());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::kIo, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string pack_floats(std::span<const float> values) {
  std::string out;
  out.reserve(values.size() * 4);
  for (float v : values) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

std::vector<float> unpack_floats(std::string_view bytes) {
  require(bytes.size() % 4 == 0, ErrorCode::kData, "tensor payload not a multiple of 4 bytes");
  Reader r(bytes);
  std::vector<float> out(bytes.size() / 4);
  for (float& v : out) v = std::bit_cast<float>(r.u32());
  return out;
}

Container policy_to_container(const PolicyParams& p) {
  Container c;
  c.header = {static_cast<std::uint32_t>(p.shape.layers), static_cast<std::uint32_t>(p.shape.embed_dim),
              static_cast<std::uint32_t>(p.shape.hidden_dim),
              static_cast<std::uint32_t>(p.shape.output_dim)};
  p.for_each_tensor([&](const std::string& name, std::span<const float> v) { c.add(name, pack_floats(v)); });
  return c;
}

PolicyParams policy_from_container(const Container& c) {
  PolicyShape shape{c.header.layers, c.header.embed_dim, c.header.hidden_dim, c.header.output_dim};
  auto p = PolicyParams::zeros(shape);
  p.for_each_tensor([&](const std::string& name, std::span<float> v) {
    const auto values = unpack_floats(c.get(name));
    require(values.size() == v.size(), ErrorCode::kData, "tensor size mismatch for " + name);
    std::copy(values.begin(), values.end(), v.begin());
  });
  require(p.finite(), ErrorCode::kData, "checkpoint holds non-finite parameters");
  return p;
}

void save_policy(const std::filesystem::path& path, const PolicyParams& p) {
  write_file(path, encode_container(policy_to_container(p)));
}

PolicyParams load_policy(const std::filesystem::path& path) {
  return policy_from_container(decode_container(read_file(path)));
}

}  // namespace pkdga
