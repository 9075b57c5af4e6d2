#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "dynabench/core.hpp"

/// Dense optical flow (Farneback polynomial expansion), HSV flow maps with
/// percentile normalization, and a content-addressed disk cache for them.
namespace dynabench::flow {

struct FlowParams {
  int pyramid_levels = 3;
  int window = 9;        ///< box window for averaging the displacement constraints
  int iterations = 3;    ///< refinements per pyramid level
  int poly_n = 5;        ///< polynomial-expansion neighborhood half-width
  double poly_sigma = 1.1;
  double mag_percentile = 95.0;
  double zero_threshold = 0.1;  ///< pixels
  void validate() const;
  /// Canonical text used to fingerprint caches.
  std::string canonical() const;
  bool operator==(const FlowParams&) const = default;
};

/// Per-pixel displacement in pixels; u is along columns, v along rows (down).
struct FlowField {
  int width = 0;
  int height = 0;
  std::vector<float> u;
  std::vector<float> v;

  FlowField() = default;
  FlowField(int w, int h) : width(w), height(h), u(static_cast<std::size_t>(w) * h), v(u.size()) {}
  bool operator==(const FlowField&) const = default;
};

/// 3-channel u8 image, pixel-interleaved RGB, row-major.
struct FlowMap {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;

  FlowMap() = default;
  FlowMap(int w, int h) : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3, 0) {}
  /// One channel as a grayscale grid.
  GrayImage channel(int c) const;
  bool operator==(const FlowMap&) const = default;
};

/// Separable, OpenMP-parallel implementation. Throws DomainError on size mismatch.
FlowField dense_flow(const GrayImage& prev, const GrayImage& next, const FlowParams& params = {});

/// Direct serial implementation of the same algorithm, for testing.
FlowField dense_flow_reference(const GrayImage& prev, const GrayImage& next, const FlowParams& params = {});

/// hue = direction, value = magnitude over its percentile, saturation 1.
FlowMap flow_to_rgb(const FlowField& field, const FlowParams& params = {});

/// Maps for consecutive pairs (f0,f1), (f1,f2), ..., oldest first.
std::vector<FlowMap> flow_history(const std::vector<GrayImage>& frames, const FlowParams& params = {});

struct FlowCacheKey {
  std::string dataset;
  std::string trajectory;
  int step = 0;
  std::vector<int> frame_offsets;
  int view = 0;
  Resolution resolution;

  std::string canonical() const;
  /// SHA-256 of canonical(), lowercase hex.
  std::string digest() const;
};

std::string sha256_hex(const std::string& text);

/// Directory of flow maps keyed by FlowCacheKey digests. Safe for concurrent
/// use; writers replace files atomically and the last writer wins. The
/// directory's meta.txt pins the digest algorithm and the flow parameters;
/// opening a directory created with other parameters throws ConfigError.
class FlowCache {
 public:
  FlowCache(std::filesystem::path dir, const FlowParams& params);

  /// $DYNABENCH_CACHE if set, otherwise `fallback`.
  static std::filesystem::path resolve_dir(const std::filesystem::path& fallback);

  FlowMap get_or_compute(const FlowCacheKey& key, const std::function<FlowMap()>& compute);
  std::filesystem::path path_for(const FlowCacheKey& key) const;
  const std::filesystem::path& dir() const { return dir_; }

  std::uint64_t hits() const { return hits_.load(); }
  std::uint64_t misses() const { return misses_.load(); }

 private:
  std::filesystem::path dir_;
  std::atomic<std::uint64_t> hits_{0};
  std::atomic<std::uint64_t> misses_{0};
};

std::vector<std::uint8_t> encode_flow_map(const FlowMap& map);
/// Returns false on bad magic or size mismatch.
bool decode_flow_map(const std::vector<std::uint8_t>& bytes, FlowMap& out);

}  // namespace dynabench::flow
