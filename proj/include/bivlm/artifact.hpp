#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "bivlm/hybrid.hpp"

namespace bivlm {

inline constexpr std::uint16_t kArtifactVersion = 1;

/// `.bvq` layout, little-endian: "BVQ1", u16 version, u32 layer count, then
/// per layer
///   name (u16 length + UTF-8), role u8, m u64, n u64,
///   N_uns u8, N_b u8, scale width u8, flags u8 (bit 0: unmasked default),
///   p_sal_used f64, p_sal_max f64, level mu/sigma/alpha f64,
///   2^N_b centers, m row scales, N_uns subset scales (each at scale width),
///   index codebook: G code lengths u8, single symbol u8 (0xFF none),
///     default group u8, bit count u64, byte count u64, bytes,
///   salient codes: count u64, byte count u64, N_b-bit packed bytes,
///   signs: N_uns counts u64, byte count u64, 1-bit packed bytes (subset order).
std::vector<std::uint8_t> encode_artifact(std::span<const QuantizedLayer> layers);
/// Throws FormatError on bad magic, version mismatch or inconsistent
/// streams, TruncationError on short input.
std::vector<QuantizedLayer> decode_artifact(std::span<const std::uint8_t> bytes);

void write_artifact(std::span<const QuantizedLayer> layers, const std::filesystem::path& path);
std::vector<QuantizedLayer> read_artifact(const std::filesystem::path& path);

}  // namespace bivlm
