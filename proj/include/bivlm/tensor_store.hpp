#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bivlm/attention.hpp"
#include "bivlm/weight_matrix.hpp"

namespace bivlm {

// .bvw tensor file, little-endian:
//   "BVW1" | version u16 = 1 | dtype u8 (0 = binary32) | role u8 | rank u32 = 2
//   | rows u64 | cols u64 | rows*cols binary32 values, row-major
inline constexpr std::uint16_t kTensorVersion = 1;
inline constexpr std::size_t kTensorHeaderBytes = 28;

std::vector<std::uint8_t> encode_tensor(const WeightMatrix& matrix);
/// `name` is attached to the decoded matrix; the file itself carries none.
WeightMatrix decode_tensor(std::span<const std::uint8_t> bytes, std::string name);

/// Name defaults to the file stem.
WeightMatrix read_tensor(const std::filesystem::path& path);
void write_tensor(const WeightMatrix& matrix, const std::filesystem::path& path);

struct TensorHeader {
  Role role;
  std::uint64_t rows;
  std::uint64_t cols;
};
/// Validates magic, version, dtype, rank and payload length without decoding values.
TensorHeader read_tensor_header(const std::filesystem::path& path);

struct ManifestEntry {
  std::string name;
  std::filesystem::path path;  // as written in the manifest
  Role role = Role::kLanguage;
  std::optional<double> p_sal_max;
};

/// JSON array of {"name","path","role","p_sal_max"?}. Relative paths resolve
/// against `base_dir` (the manifest's directory).
struct ModelManifest {
  std::vector<ManifestEntry> entries;
  std::filesystem::path base_dir;

  std::filesystem::path resolve(const ManifestEntry& entry) const;
};

/// Parses and checks unique names. Does not touch the referenced files.
ModelManifest parse_manifest(const std::string& json_text, std::filesystem::path base_dir);
/// Parses, then checks that every referenced tensor exists and has a valid header.
ModelManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const ModelManifest& manifest, const std::filesystem::path& path);
/// Reads the entry's tensor and stamps it with the manifest's name and role.
WeightMatrix load_layer(const ModelManifest& manifest, const ManifestEntry& entry);

// .bva attention file, little-endian:
//   "BVA1" | layer count u32 | per layer:
//     j u32 | n u32 | N_img u32 | N_sys u32 | N_img u32 | N_ins u32 | N_out u32
//     | n × (4 group masses f32 + N_img image-token scores f32)
std::vector<std::uint8_t> encode_attention(std::span<const AttentionTensor> layers);
std::vector<AttentionTensor> decode_attention(std::span<const std::uint8_t> bytes);
std::vector<AttentionTensor> read_attention(const std::filesystem::path& path);
void write_attention(std::span<const AttentionTensor> layers, const std::filesystem::path& path);

}  // namespace bivlm
