#include <openssl/evp.h>

#include <cstdio>
#include <cstdlib>
#include <json.hpp>
#include <memory>
#include <string_view>

#include "dynabench/container.hpp"
#include "dynabench/flow.hpp"

namespace dynabench::flow {
namespace {

constexpr char kMagic[4] = {'D', 'F', 'C', '1'};
constexpr std::size_t kHeaderSize = 16;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::vector<std::uint8_t>& b, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[at + i]) << (8 * i);
  return v;
}

std::string meta_text(const FlowParams& params) {
  return "digest = sha256\nformat = DFC1\nparams = " + sha256_hex(params.canonical()) + "\n";
}

}  // namespace

std::string sha256_hex(const std::string& text) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), text.data(), text.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1)
    throw std::runtime_error("SHA-256 digest failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  hex.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    hex.push_back(kHex[digest[i] >> 4]);
    hex.push_back(kHex[digest[i] & 15]);
  }
  return hex;
}

std::string FlowCacheKey::canonical() const {
  // A JSON array keeps field boundaries unambiguous for arbitrary path text.
  const nlohmann::json j = {"dynabench-flow", dataset, trajectory, step, frame_offsets, view,
                            {resolution.width, resolution.height}};
  return j.dump();
}

std::string FlowCacheKey::digest() const { return sha256_hex(canonical()); }

std::vector<std::uint8_t> encode_flow_map(const FlowMap& map) {
  if (map.rgb.size() != static_cast<std::size_t>(map.width) * map.height * 3)
    throw DomainError("flow map buffer does not match its dimensions");
  std::vector<std::uint8_t> out(kMagic, kMagic + 4);
  put_u32(out, static_cast<std::uint32_t>(map.width));
  put_u32(out, static_cast<std::uint32_t>(map.height));
  put_u32(out, 3);
  out.insert(out.end(), map.rgb.begin(), map.rgb.end());
  return out;
}

bool decode_flow_map(const std::vector<std::uint8_t>& bytes, FlowMap& out) {
  if (bytes.size() < kHeaderSize || std::string_view(reinterpret_cast<const char*>(bytes.data()), 4) != "DFC1")
    return false;
  const std::uint64_t w = get_u32(bytes, 4), h = get_u32(bytes, 8), c = get_u32(bytes, 12);
  if (c != 3 || w > (1u << 16) || h > (1u << 16) || bytes.size() != kHeaderSize + w * h * 3) return false;
  out = FlowMap(static_cast<int>(w), static_cast<int>(h));
  std::copy(bytes.begin() + kHeaderSize, bytes.end(), out.rgb.begin());
  return true;
}

FlowCache::FlowCache(std::filesystem::path dir, const FlowParams& params) : dir_(std::move(dir)) {
  params.validate();
  std::filesystem::create_directories(dir_);
  const auto meta_path = dir_ / "meta.txt";
  const std::string expected = meta_text(params);
  if (std::filesystem::exists(meta_path)) {
    const auto bytes = harness::read_file(meta_path);
    if (std::string(bytes.begin(), bytes.end()) != expected)
      throw ConfigError("flow cache " + dir_.string() + " was created with a different digest or flow parameters");
    return;
  }
  harness::write_file_atomic(meta_path,
                             std::span(reinterpret_cast<const std::uint8_t*>(expected.data()), expected.size()));
}

std::filesystem::path FlowCache::resolve_dir(const std::filesystem::path& fallback) {
  const char* env = std::getenv("DYNABENCH_CACHE");
  return env && *env ? std::filesystem::path(env) : fallback;
}

std::filesystem::path FlowCache::path_for(const FlowCacheKey& key) const { return dir_ / (key.digest() + ".dfc"); }

FlowMap FlowCache::get_or_compute(const FlowCacheKey& key, const std::function<FlowMap()>& compute) {
  const auto path = path_for(key);
  std::error_code ec;
  if (std::filesystem::exists(path, ec)) {
    try {
      FlowMap map;
      if (decode_flow_map(harness::read_file(path), map)) {
        ++hits_;
        return map;
      }
    } catch (const std::runtime_error&) {
      // Unreadable (e.g. removed concurrently): fall through and recompute.
    }
  }
  FlowMap map = compute();
  harness::write_file_atomic(path, encode_flow_map(map));
  ++misses_;
  return map;
}

}  // namespace dynabench::flow
