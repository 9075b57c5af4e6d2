#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "dynabench/episode.hpp"
#include "dynabench/expert.hpp"

/// Episode container files and dataset manifests.
///
/// Layout (all integers little-endian, floats IEEE-754 f64 LE):
///   "DMB1" | version u32 | header_len u64 | JSON header
///   per step: frame per view (u8, row-major)
///             mask per view (u8) when step % mask_stride == 0
///             proprio f64[4 * arms] | action f64[3 * arms] | object pose f64[2]
///   CRC-32 (zlib polynomial) of every preceding byte, u32
namespace dynabench::harness {

inline constexpr std::uint32_t kContainerVersion = 1;

std::vector<std::uint8_t> encode_episode(const Episode& episode);
/// Throws ParseError (with the failing byte offset) or UnsupportedVersion.
Episode decode_episode(std::span<const std::uint8_t> bytes);

void write_episode(const std::filesystem::path& path, const Episode& episode);
Episode read_episode(const std::filesystem::path& path);

void write_manifest(const std::filesystem::path& path, const expert::DatasetManifest& manifest);
expert::DatasetManifest read_manifest(const std::filesystem::path& path);

/// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

}  // namespace dynabench::harness
