#include "bivlm/tensor_store.hpp"

#include <cmath>
#include <fstream>
#include <iterator>
#include <set>

#include <json.hpp>

#include "bivlm/errors.hpp"
#include "byte_io.hpp"

namespace bivlm {

namespace detail {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed: " + path.string());
  return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot create " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace detail

namespace {

constexpr std::string_view kTensorMagic = "BVW1";
constexpr std::string_view kAttentionMagic = "BVA1";

TensorHeader parse_header(detail::ByteReader& r) {
  r.expect_magic(kTensorMagic);
  const auto version = r.u16();
  if (version != kTensorVersion) throw FormatError(r.what() + ": unsupported version " + std::to_string(version));
  const auto dtype = r.u8();
  if (dtype != 0) throw FormatError(r.what() + ": unsupported dtype " + std::to_string(dtype));
  const auto role = r.u8();
  if (role > 2) throw FormatError(r.what() + ": unknown role code " + std::to_string(role));
  const auto rank = r.u32();
  if (rank != 2) throw FormatError(r.what() + ": rank " + std::to_string(rank) + ", expected 2");
  TensorHeader h{static_cast<Role>(role), r.u64(), r.u64()};
  if (h.rows == 0 || h.cols == 0) throw FormatError(r.what() + ": zero-size dimension");
  if (h.cols > (std::uint64_t{1} << 40) / h.rows) throw FormatError(r.what() + ": implausible dimensions");
  return h;
}

}  // namespace

std::vector<std::uint8_t> encode_tensor(const WeightMatrix& matrix) {
  if (matrix.rows() == 0 || matrix.cols() == 0)
    throw FormatError("cannot encode zero-size matrix '" + matrix.name() + "'");
  detail::ByteWriter w;
  w.buffer().reserve(kTensorHeaderBytes + 4 * matrix.size());
  w.magic(kTensorMagic);
  w.u16(kTensorVersion);
  w.u8(0);
  w.u8(static_cast<std::uint8_t>(matrix.role()));
  w.u32(2);
  w.u64(matrix.rows());
  w.u64(matrix.cols());
  for (float v : matrix.data()) w.f32(v);
  return std::move(w.buffer());
}

WeightMatrix decode_tensor(std::span<const std::uint8_t> bytes, std::string name) {
  detail::ByteReader r(bytes, "tensor '" + name + "'");
  const TensorHeader h = parse_header(r);
  const std::size_t count = h.rows * h.cols;
  r.need(count * 4);
  std::vector<float> data(count);
  for (auto& v : data) v = r.f32();
  if (r.remaining() != 0) throw FormatError(r.what() + ": " + std::to_string(r.remaining()) + " trailing bytes");
  return WeightMatrix(std::move(name), h.role, h.rows, h.cols, std::move(data));
}

WeightMatrix read_tensor(const std::filesystem::path& path) {
  return decode_tensor(detail::read_file(path), path.stem().string());
}

void write_tensor(const WeightMatrix& matrix, const std::filesystem::path& path) {
  detail::write_file(path, encode_tensor(matrix));
}

TensorHeader read_tensor_header(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> head(kTensorHeaderBytes);
  in.read(reinterpret_cast<char*>(head.data()), static_cast<std::streamsize>(head.size()));
  head.resize(static_cast<std::size_t>(in.gcount()));
  detail::ByteReader r(head, path.string());
  const TensorHeader h = parse_header(r);
  const auto size = std::filesystem::file_size(path);
  if (size < kTensorHeaderBytes + 4 * h.rows * h.cols)
    throw TruncationError(path.string() + ": payload shorter than declared " + std::to_string(h.rows) + "x" +
                          std::to_string(h.cols));
  return h;
}

std::filesystem::path ModelManifest::resolve(const ManifestEntry& entry) const {
  return entry.path.is_absolute() ? entry.path : base_dir / entry.path;
}

ModelManifest parse_manifest(const std::string& json_text, std::filesystem::path base_dir) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("manifest: ") + e.what());
  }
  if (!doc.is_array()) throw FormatError("manifest: top level must be an array");

  ModelManifest m;
  m.base_dir = std::move(base_dir);
  std::set<std::string> seen;
  for (const auto& item : doc) {
    if (!item.is_object() || !item.contains("name") || !item.contains("path") || !item.contains("role"))
      throw FormatError("manifest: every entry needs \"name\", \"path\" and \"role\"");
    ManifestEntry e;
    try {
      e.name = item.at("name").get<std::string>();
      e.path = item.at("path").get<std::string>();
      e.role = parse_role(item.at("role").get<std::string>());
      if (item.contains("p_sal_max") && !item.at("p_sal_max").is_null()) {
        e.p_sal_max = item.at("p_sal_max").get<double>();
        if (!(*e.p_sal_max > 0.0 && *e.p_sal_max < 1.0))
          throw DomainError("manifest: p_sal_max of '" + e.name + "' must lie in (0, 1)");
      }
    } catch (const nlohmann::json::exception& ex) {
      throw FormatError(std::string("manifest: ") + ex.what());
    } catch (const ValueError& ex) {
      throw FormatError(std::string("manifest: ") + ex.what());
    }
    if (!seen.insert(e.name).second) throw FormatError("manifest: duplicate layer name '" + e.name + "'");
    m.entries.push_back(std::move(e));
  }
  return m;
}

ModelManifest read_manifest(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  ModelManifest m = parse_manifest(std::string(bytes.begin(), bytes.end()), path.parent_path());
  for (const auto& e : m.entries) {
    const auto p = m.resolve(e);
    if (!std::filesystem::exists(p)) throw IoError("manifest: layer '" + e.name + "' references missing file " + p.string());
    read_tensor_header(p);
  }
  return m;
}

void write_manifest(const ModelManifest& manifest, const std::filesystem::path& path) {
  nlohmann::json doc = nlohmann::json::array();
  for (const auto& e : manifest.entries) {
    nlohmann::json item{{"name", e.name}, {"path", e.path.generic_string()}, {"role", role_name(e.role)}};
    if (e.p_sal_max) item["p_sal_max"] = *e.p_sal_max;
    doc.push_back(std::move(item));
  }
  const std::string text = doc.dump(2) + "\n";
  detail::write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

WeightMatrix load_layer(const ModelManifest& manifest, const ManifestEntry& entry) {
  WeightMatrix w = decode_tensor(detail::read_file(manifest.resolve(entry)), entry.name);
  w.set_role(entry.role);
  return w;
}

std::vector<std::uint8_t> encode_attention(std::span<const AttentionTensor> layers) {
  detail::ByteWriter w;
  w.magic(kAttentionMagic);
  w.u32(static_cast<std::uint32_t>(layers.size()));
  for (const auto& t : layers) {
    const std::size_t n_img = t.image_tokens();
    if (t.group_mass.size() != t.output_tokens || t.image_scores.size() != t.output_tokens * n_img)
      throw ValueError("attention layer " + std::to_string(t.layer) + ": score arrays do not match declared sizes");
    w.u32(t.layer);
    w.u32(t.output_tokens);
    w.u32(t.image_tokens());
    for (auto g : t.group_sizes) w.u32(g);
    for (std::size_t i = 0; i < t.output_tokens; ++i) {
      for (float m : t.group_mass[i]) w.f32(m);
      for (std::size_t k = 0; k < n_img; ++k) w.f32(t.image_scores[i * n_img + k]);
    }
  }
  return std::move(w.buffer());
}

std::vector<AttentionTensor> decode_attention(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes, "attention file");
  r.expect_magic(kAttentionMagic);
  const std::uint32_t count = r.u32();
  std::vector<AttentionTensor> out;
  for (std::uint32_t l = 0; l < count; ++l) {
    AttentionTensor t;
    t.layer = r.u32();
    t.output_tokens = r.u32();
    const std::uint32_t n_img = r.u32();
    for (auto& g : t.group_sizes) g = r.u32();
    if (t.group_sizes[1] != n_img)
      throw FormatError("attention layer " + std::to_string(t.layer) + ": N_img mismatch between header fields");
    r.need(static_cast<std::size_t>(t.output_tokens) * (4 + n_img) * 4);
    t.group_mass.resize(t.output_tokens);
    t.image_scores.resize(static_cast<std::size_t>(t.output_tokens) * n_img);
    for (std::size_t i = 0; i < t.output_tokens; ++i) {
      for (auto& m : t.group_mass[i]) m = r.f32();
      for (std::size_t k = 0; k < n_img; ++k) t.image_scores[i * n_img + k] = r.f32();
    }
    out.push_back(std::move(t));
  }
  if (r.remaining() != 0) throw FormatError("attention file: trailing bytes");
  return out;
}

std::vector<AttentionTensor> read_attention(const std::filesystem::path& path) {
  return decode_attention(detail::read_file(path));
}

void write_attention(std::span<const AttentionTensor> layers, const std::filesystem::path& path) {
  detail::write_file(path, encode_attention(layers));
}

}  // namespace bivlm
