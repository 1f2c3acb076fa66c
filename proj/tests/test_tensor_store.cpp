#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>

#include "bivlm/errors.hpp"
#include "bivlm/synthetic.hpp"
#include "bivlm/tensor_store.hpp"

namespace fs = std::filesystem;
using namespace bivlm;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "bivlm_tensor_store_test";
  fs::create_directories(dir);
  return dir / name;
}

std::vector<std::uint8_t> slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void spit(const fs::path& p, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST(TensorStore, SmallMatrixRoundTrip) {
  const WeightMatrix w("w", Role::kVision, 2, 2, {1.0f, 2.0f, 3.0f, 4.0f});
  const auto path = scratch("two.bvw");
  write_tensor(w, path);
  const auto r = read_tensor(path);
  EXPECT_EQ(r.rows(), 2u);
  EXPECT_EQ(r.cols(), 2u);
  EXPECT_EQ(r.role(), Role::kVision);
  EXPECT_EQ(r.name(), "two");
  EXPECT_EQ(std::vector<float>(r.data().begin(), r.data().end()), (std::vector<float>{1, 2, 3, 4}));
}

TEST(TensorStore, RandomMatrixBitwiseRoundTrip) {
  const auto w = synth::gaussian("r", Role::kLanguage, 64, 64, 1.0, 11);
  const auto path = scratch("rand.bvw");
  write_tensor(w, path);
  const auto r = read_tensor(path);
  ASSERT_EQ(r.size(), w.size());
  EXPECT_EQ(std::memcmp(r.data().data(), w.data().data(), w.size() * sizeof(float)), 0);
  EXPECT_EQ(encode_tensor(r), encode_tensor(w));
}

TEST(TensorStore, OneByOneFileIs32Bytes) {
  const WeightMatrix w("one", Role::kLanguage, 1, 1, {-3.5f});
  const auto bytes = encode_tensor(w);
  EXPECT_EQ(bytes.size(), 32u);
  EXPECT_EQ(kTensorHeaderBytes + 4, 32u);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "BVW1");
  // Little-endian version 1, dtype 0, role language, rank 2.
  EXPECT_EQ(bytes[4], 1);
  EXPECT_EQ(bytes[5], 0);
  EXPECT_EQ(bytes[6], 0);
  EXPECT_EQ(bytes[7], static_cast<std::uint8_t>(Role::kLanguage));
  EXPECT_EQ(bytes[8], 2);
  // -3.5f = 0xC0600000.
  EXPECT_EQ(bytes[28], 0x00);
  EXPECT_EQ(bytes[30], 0x60);
  EXPECT_EQ(bytes[31], 0xC0);
}

TEST(TensorStore, BadMagicIsFormatError) {
  auto bytes = encode_tensor(WeightMatrix("x", Role::kLanguage, 1, 2, {1.0f, 2.0f}));
  std::memcpy(bytes.data(), "XXXX", 4);
  EXPECT_THROW(decode_tensor(bytes, "x"), FormatError);
  const auto path = scratch("bad.bvw");
  spit(path, bytes);
  EXPECT_THROW(read_tensor(path), FormatError);
  EXPECT_THROW(read_tensor_header(path), FormatError);
}

TEST(TensorStore, TruncatedPayloadIsTruncationError) {
  auto bytes = encode_tensor(WeightMatrix("x", Role::kLanguage, 2, 2, {1, 2, 3, 4}));
  bytes.pop_back();
  EXPECT_THROW(decode_tensor(bytes, "x"), TruncationError);
  bytes.resize(10);
  EXPECT_THROW(decode_tensor(bytes, "x"), TruncationError);
}

TEST(TensorStore, NonFiniteValuesRejected) {
  auto bytes = encode_tensor(WeightMatrix("x", Role::kLanguage, 1, 1, {1.0f}));
  const float nan = std::numeric_limits<float>::quiet_NaN();
  std::memcpy(bytes.data() + 28, &nan, 4);
  EXPECT_THROW(decode_tensor(bytes, "x"), ValueError);
  EXPECT_THROW(WeightMatrix("x", Role::kLanguage, 1, 1, {std::numeric_limits<float>::infinity()}), ValueError);
}

TEST(TensorStore, UnsupportedVersionAndRankRejected) {
  auto bytes = encode_tensor(WeightMatrix("x", Role::kLanguage, 1, 1, {1.0f}));
  auto v = bytes;
  v[4] = 2;
  EXPECT_THROW(decode_tensor(v, "x"), FormatError);
  auto r = bytes;
  r[8] = 3;
  EXPECT_THROW(decode_tensor(r, "x"), FormatError);
}

TEST(TensorStore, ZeroSizeMatrixRejectedOnWrite) {
  const WeightMatrix empty("e", Role::kLanguage, 0, 4, {});
  EXPECT_THROW(encode_tensor(empty), FormatError);
  EXPECT_THROW(write_tensor(empty, scratch("empty.bvw")), FormatError);
}

TEST(TensorStore, WriteToMissingDirectoryIsIoError) {
  const WeightMatrix w("w", Role::kLanguage, 1, 1, {1.0f});
  EXPECT_THROW(write_tensor(w, "/nonexistent-dir-bivlm/x.bvw"), IoError);
}

TEST(TensorStore, ManifestParsesAndResolves) {
  const auto m = parse_manifest(
      R"([{"name":"a","path":"a.bvw","role":"vision"},{"name":"b","path":"/abs/b.bvw","role":"language","p_sal_max":0.02}])",
      "/base");
  ASSERT_EQ(m.entries.size(), 2u);
  EXPECT_EQ(m.entries[0].role, Role::kVision);
  EXPECT_FALSE(m.entries[0].p_sal_max.has_value());
  EXPECT_DOUBLE_EQ(*m.entries[1].p_sal_max, 0.02);
  EXPECT_EQ(m.resolve(m.entries[0]), fs::path("/base/a.bvw"));
  EXPECT_EQ(m.resolve(m.entries[1]), fs::path("/abs/b.bvw"));
}

TEST(TensorStore, ManifestRejectsDuplicatesAndBadRoles) {
  EXPECT_THROW(parse_manifest(R"([{"name":"a","path":"x","role":"vision"},{"name":"a","path":"y","role":"vision"}])", "."),
               Error);
  EXPECT_THROW(parse_manifest(R"([{"name":"a","path":"x","role":"decoder"}])", "."), Error);
  EXPECT_THROW(parse_manifest("{not json", "."), FormatError);
}

TEST(TensorStore, ManifestFileRoundTripChecksTensors) {
  const auto dir = scratch("model");
  fs::create_directories(dir);
  write_tensor(synth::gaussian("l0", Role::kAdaptor, 4, 5, 1.0, 1), dir / "l0.bvw");
  ModelManifest m;
  m.base_dir = dir;
  m.entries.push_back({"layer0", "l0.bvw", Role::kAdaptor, 0.03});
  write_manifest(m, dir / "manifest.json");
  const auto r = read_manifest(dir / "manifest.json");
  ASSERT_EQ(r.entries.size(), 1u);
  EXPECT_EQ(r.entries[0].name, "layer0");
  EXPECT_DOUBLE_EQ(*r.entries[0].p_sal_max, 0.03);
  const auto w = load_layer(r, r.entries[0]);
  EXPECT_EQ(w.name(), "layer0");
  EXPECT_EQ(w.role(), Role::kAdaptor);
  EXPECT_EQ(w.rows(), 4u);

  m.entries.push_back({"missing", "nope.bvw", Role::kLanguage, std::nullopt});
  write_manifest(m, dir / "broken.json");
  EXPECT_THROW(read_manifest(dir / "broken.json"), Error);
}

TEST(TensorStore, AttentionRoundTripProperty) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::vector<AttentionTensor> layers;
    for (std::uint32_t j = 0; j < 3; ++j)
      layers.push_back(j == 0 ? synth::vision_attention(j, 5, 7 + static_cast<std::uint32_t>(seed), seed)
                              : synth::language_attention(j, 4, 9, seed * 10 + j));
    const auto bytes = encode_attention(layers);
    const auto back = decode_attention(bytes);
    ASSERT_EQ(back.size(), layers.size());
    for (std::size_t l = 0; l < layers.size(); ++l) {
      EXPECT_EQ(back[l].layer, layers[l].layer);
      EXPECT_EQ(back[l].group_sizes, layers[l].group_sizes);
      EXPECT_EQ(back[l].group_mass, layers[l].group_mass);
      EXPECT_EQ(back[l].image_scores, layers[l].image_scores);
    }
    EXPECT_EQ(encode_attention(back), bytes);
    auto cut = bytes;
    cut.resize(cut.size() - 3);
    EXPECT_THROW(decode_attention(cut), TruncationError);
  }
}

TEST(TensorStore, WeightMatrixPropertyRoundTrip) {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> dim(1, 40);
  for (int t = 0; t < 30; ++t) {
    const auto w = synth::gaussian("p", static_cast<Role>(t % 3), static_cast<std::size_t>(dim(rng)),
                                   static_cast<std::size_t>(dim(rng)), 0.5, static_cast<std::uint64_t>(t));
    const auto r = decode_tensor(encode_tensor(w), "p");
    EXPECT_EQ(r.role(), w.role());
    EXPECT_EQ(std::memcmp(r.data().data(), w.data().data(), w.size() * sizeof(float)), 0);
  }
}
