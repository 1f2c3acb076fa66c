#include "bivlm/artifact.hpp"

#include <algorithm>
#include <string>

#include "bivlm/bit_packer.hpp"
#include "bivlm/errors.hpp"
#include "bivlm/half.hpp"
#include "byte_io.hpp"

namespace bivlm {

namespace {

constexpr std::uint8_t kFlagUnmasked = 1;
constexpr std::uint8_t kNoSymbol = 0xFF;

void put_scalar(detail::ByteWriter& out, double v, int width) {
  if (width == 16)
    out.u16(float_to_half(static_cast<float>(v)));
  else
    out.f32(static_cast<float>(v));
}

double get_scalar(detail::ByteReader& in, int width) {
  return width == 16 ? static_cast<double>(half_to_float(in.u16())) : static_cast<double>(in.f32());
}

void put_blob(detail::ByteWriter& out, std::span<const std::uint8_t> bytes) {
  out.u64(bytes.size());
  out.bytes(bytes);
}

std::span<const std::uint8_t> get_blob(detail::ByteReader& in) {
  const auto n = in.u64();
  if (n > in.remaining()) in.need(n);
  return in.bytes(static_cast<std::size_t>(n));
}

void encode_layer(detail::ByteWriter& out, const QuantizedLayer& layer) {
  layer.check();
  if (layer.name.size() > 0xFFFF) throw FormatError("layer name longer than 65535 bytes");
  out.u16(static_cast<std::uint16_t>(layer.name.size()));
  out.bytes(std::span(reinterpret_cast<const std::uint8_t*>(layer.name.data()), layer.name.size()));
  out.u8(static_cast<std::uint8_t>(layer.role));
  out.u64(layer.rows);
  out.u64(layer.cols);
  out.u8(static_cast<std::uint8_t>(layer.n_uns));
  out.u8(static_cast<std::uint8_t>(layer.n_bits));
  out.u8(static_cast<std::uint8_t>(layer.scale_bits));
  out.u8(layer.unmasked_default ? kFlagUnmasked : 0);
  out.f64(layer.p_sal_used);
  out.f64(layer.p_sal_max);
  out.f64(layer.salient.grid.mu);
  out.f64(layer.salient.grid.sigma);
  out.f64(layer.salient.grid.alpha);

  for (double c : layer.salient.grid.centers) put_scalar(out, c, layer.scale_bits);
  for (double a : layer.salient.scales) put_scalar(out, a, layer.scale_bits);
  for (const auto& s : layer.subsets) put_scalar(out, s.scale, layer.scale_bits);

  const auto index = encode_labels(layer.labels, layer.groups(), layer.unmasked_default);
  out.bytes(index.book.lengths);
  out.u8(index.book.single_symbol() ? static_cast<std::uint8_t>(index.book.only) : kNoSymbol);
  out.u8(index.default_group);
  out.u64(index.bits);
  put_blob(out, index.bytes);

  out.u64(layer.salient.codes.size());
  put_blob(out, pack_fixed(layer.salient.codes, layer.n_bits));

  std::vector<std::int8_t> signs;
  for (const auto& s : layer.subsets) {
    out.u64(s.signs.size());
    signs.insert(signs.end(), s.signs.begin(), s.signs.end());
  }
  put_blob(out, pack_signs(signs));
}

QuantizedLayer decode_layer(detail::ByteReader& in) {
  QuantizedLayer layer;
  const auto name_len = in.u16();
  const auto name = in.bytes(name_len);
  layer.name.assign(name.begin(), name.end());
  const auto role = in.u8();
  if (role > 2) throw FormatError(layer.name + ": unknown role code " + std::to_string(role));
  layer.role = static_cast<Role>(role);
  layer.rows = in.u64();
  layer.cols = in.u64();
  layer.n_uns = in.u8();
  layer.n_bits = in.u8();
  layer.scale_bits = in.u8();
  const auto flags = in.u8();
  layer.unmasked_default = (flags & kFlagUnmasked) != 0;
  if (layer.n_uns < 1 || layer.n_uns >= kMaxGroups) throw FormatError(layer.name + ": N_uns out of range");
  if (layer.n_bits < 1 || layer.n_bits > 8) throw FormatError(layer.name + ": N_b out of range");
  if (layer.scale_bits != 16 && layer.scale_bits != 32) throw FormatError(layer.name + ": bad scale width");
  if (layer.rows == 0 || layer.cols == 0) throw FormatError(layer.name + ": empty shape");
  if (layer.rows > (std::size_t{1} << 40) / layer.cols) throw FormatError(layer.name + ": shape too large");
  layer.p_sal_used = in.f64();
  layer.p_sal_max = in.f64();
  const double mu = in.f64();
  const double sigma = in.f64();
  const double alpha = in.f64();
  try {
    layer.salient.grid = adaptive_levels(mu, sigma, layer.n_bits, alpha);
  } catch (const DomainError& e) {
    throw FormatError(layer.name + ": " + e.what());
  }
  layer.salient.n_bits = layer.n_bits;

  const int w = layer.scale_bits;
  const std::size_t n_centers = std::size_t{1} << layer.n_bits;
  in.need((n_centers + layer.rows + static_cast<std::size_t>(layer.n_uns)) * static_cast<std::size_t>(w / 8));
  for (auto& c : layer.salient.grid.centers) c = get_scalar(in, w);
  layer.salient.scales.resize(layer.rows);
  for (auto& a : layer.salient.scales) a = get_scalar(in, w);
  layer.subsets.resize(static_cast<std::size_t>(layer.n_uns));
  for (std::size_t k = 0; k < layer.subsets.size(); ++k) {
    layer.subsets[k].k = static_cast<int>(k + 1);
    layer.subsets[k].scale = get_scalar(in, w);
  }

  IndexStream index;
  const auto lengths = in.bytes(layer.groups());
  const auto only = in.u8();
  index.default_group = in.u8();
  index.bits = in.u64();
  const auto index_bytes = get_blob(in);
  index.bytes.assign(index_bytes.begin(), index_bytes.end());
  index.unmasked_default = layer.unmasked_default;
  index.count = layer.size();
  if (index.default_group >= layer.groups()) throw FormatError(layer.name + ": default group out of range");
  const bool all_zero = std::all_of(lengths.begin(), lengths.end(), [](auto l) { return l == 0; });
  if (only != kNoSymbol || !all_zero || !layer.unmasked_default)
    index.book = codebook_from_lengths(lengths, only == kNoSymbol ? -1 : only);
  else
    index.book.lengths.assign(lengths.begin(), lengths.end());
  layer.labels = decode_labels(index);

  const auto n_codes = in.u64();
  const auto codes = get_blob(in);
  if (n_codes > layer.size()) throw FormatError(layer.name + ": salient code count exceeds m*n");
  layer.salient.codes = unpack_fixed(codes, layer.n_bits, static_cast<std::size_t>(n_codes));

  std::size_t total_signs = 0;
  std::vector<std::size_t> sign_counts(layer.subsets.size());
  for (auto& c : sign_counts) {
    c = static_cast<std::size_t>(in.u64());
    if (c > layer.size()) throw FormatError(layer.name + ": sign count exceeds m*n");
    total_signs += c;
  }
  if (total_signs > layer.size()) throw FormatError(layer.name + ": sign counts exceed m*n");
  const auto all_signs = unpack_signs(get_blob(in), total_signs);
  std::size_t pos = 0;
  for (std::size_t k = 0; k < layer.subsets.size(); ++k) {
    layer.subsets[k].signs.assign(all_signs.begin() + static_cast<std::ptrdiff_t>(pos),
                                  all_signs.begin() + static_cast<std::ptrdiff_t>(pos + sign_counts[k]));
    pos += sign_counts[k];
  }
  layer.check();
  return layer;
}

}  // namespace

std::vector<std::uint8_t> encode_artifact(std::span<const QuantizedLayer> layers) {
  detail::ByteWriter out;
  out.magic("BVQ1");
  out.u16(kArtifactVersion);
  out.u32(static_cast<std::uint32_t>(layers.size()));
  for (const auto& layer : layers) encode_layer(out, layer);
  return std::move(out.buffer());
}

std::vector<QuantizedLayer> decode_artifact(std::span<const std::uint8_t> bytes) {
  detail::ByteReader in(bytes, "artifact");
  in.expect_magic("BVQ1");
  const auto version = in.u16();
  if (version != kArtifactVersion)
    throw FormatError("artifact version " + std::to_string(version) + " is not supported (expected " +
                      std::to_string(kArtifactVersion) + ")");
  const auto count = in.u32();
  std::vector<QuantizedLayer> layers;
  for (std::uint32_t l = 0; l < count; ++l) layers.push_back(decode_layer(in));
  if (in.remaining() != 0) throw FormatError("artifact has " + std::to_string(in.remaining()) + " trailing bytes");
  return layers;
}

void write_artifact(std::span<const QuantizedLayer> layers, const std::filesystem::path& path) {
  detail::write_file(path, encode_artifact(layers));
}

std::vector<QuantizedLayer> read_artifact(const std::filesystem::path& path) {
  return decode_artifact(detail::read_file(path));
}

}  // namespace bivlm
