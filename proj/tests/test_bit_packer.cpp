#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "bivlm/bit_packer.hpp"
#include "bivlm/errors.hpp"
#include "bivlm/hybrid.hpp"
#include "bivlm/synthetic.hpp"
#include "oracles.hpp"

using namespace bivlm;

namespace {

bool prefix_free(const CodeBook& b) {
  for (std::size_t i = 0; i < b.groups(); ++i)
    for (std::size_t j = 0; j < b.groups(); ++j) {
      if (i == j || b.lengths[i] == 0 || b.lengths[j] == 0 || b.lengths[i] > b.lengths[j]) continue;
      if ((b.codes[j] >> (b.lengths[j] - b.lengths[i])) == b.codes[i]) return false;
    }
  return true;
}

std::vector<std::uint8_t> random_labels(std::size_t n, std::size_t groups, std::mt19937_64& rng) {
  std::vector<double> w(groups);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto& x : w) x = std::pow(u(rng), 3.0) + 1e-3;
  std::discrete_distribution<int> d(w.begin(), w.end());
  std::vector<std::uint8_t> out(n);
  for (auto& l : out) l = static_cast<std::uint8_t>(d(rng));
  return out;
}

}  // namespace

TEST(MaxPartitions, Formula) {
  EXPECT_EQ(max_partitions(3), 5);
  EXPECT_EQ(max_partitions(2), 1);
  EXPECT_EQ(max_partitions(4), 13);
  EXPECT_THROW(max_partitions(1), DomainError);
}

TEST(IndexBits, Examples) {
  EXPECT_NEAR(index_bits(5, 0.01, 0.198, 3), 6 * 0.198 + 0.03, 1e-12);
  EXPECT_NEAR(index_bits(5, 0.01, 3), 1.218, 1e-12);
  // N_uns = 1: only eta = 1 contributes min(2, 0) = 0 after the clamp.
  EXPECT_NEAR(index_bits(1, 0.05, 3), 0.05 * 3, 1e-12);
  EXPECT_NEAR(index_bits(5, 0.0, 3), 6 * 0.2, 1e-12);
  EXPECT_THROW(index_bits(5, 0.01, 0.3, 3), DomainError);
  EXPECT_THROW(index_bits(0, 0.01, 3), DomainError);
}

TEST(CodeBook, TwoEqualGroups) {
  const std::vector<double> f{0.5, 0.5};
  const auto b = build_codebook(f);
  EXPECT_EQ(b.lengths, (std::vector<std::uint8_t>{1, 1}));
  EXPECT_EQ(b.codes, (std::vector<std::uint64_t>{0, 1}));
}

TEST(CodeBook, DominantGroupGetsOneBit) {
  const std::vector<double> f{0.97, 0.01, 0.01, 0.01};
  const auto b = build_codebook(f);
  EXPECT_EQ(b.lengths[0], 1);
  EXPECT_NEAR(b.average_length(f), oracle::optimal_prefix_length(f), 1e-12);
}

TEST(CodeBook, UniformSixWithinEntropyPlusOne) {
  const std::vector<double> f(6, 1.0 / 6);
  const auto b = build_codebook(f);
  EXPECT_LE(b.average_length(f), std::log2(6.0) + 1);
  EXPECT_NEAR(b.average_length(f), oracle::optimal_prefix_length(f), 1e-12);
  EXPECT_TRUE(prefix_free(b));
}

TEST(CodeBook, OptimalAndPrefixFreeOnRandomFrequencies) {
  std::mt19937_64 rng(71);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> f(2 + t % 6);
    for (auto& x : f) x = t % 5 == 0 ? std::floor(4 * u(rng)) : u(rng);
    if (std::accumulate(f.begin(), f.end(), 0.0) == 0.0) f[0] = 1.0;
    const auto b = build_codebook(f);
    EXPECT_TRUE(prefix_free(b));
    EXPECT_NEAR(b.average_length(f), oracle::optimal_prefix_length(f), 1e-9) << t;
    const auto again = codebook_from_lengths(b.lengths, b.only);
    EXPECT_EQ(again.codes, b.codes);
  }
}

TEST(CodeBook, CanonicalOrdering) {
  const std::vector<double> f{0.1, 0.4, 0.2, 0.3};
  const auto b = build_codebook(f);
  // Codes increase with (length, symbol).
  std::vector<std::size_t> order(4);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto x, auto y) {
    return std::pair(b.lengths[x], x) < std::pair(b.lengths[y], y);
  });
  for (std::size_t i = 1; i < 4; ++i) {
    const auto a = order[i - 1], c = order[i];
    EXPECT_LT(b.codes[a] << (b.lengths[c] - b.lengths[a]), b.codes[c]);
  }
}

TEST(CodeBook, SingleSymbol) {
  const std::vector<double> f{0.0, 3.0, 0.0};
  const auto b = build_codebook(f);
  EXPECT_TRUE(b.single_symbol());
  EXPECT_EQ(b.only, 1);
  EXPECT_EQ(b.average_length(f), 0.0);
  const std::vector<std::uint8_t> labels(10, 1);
  EXPECT_TRUE(pack_stream(labels, b).empty());
  EXPECT_EQ(unpack_stream({}, b, 10), labels);
}

TEST(CodeBook, Errors) {
  EXPECT_THROW(build_codebook(std::vector<double>{0.0, 0.0}), DomainError);
  EXPECT_THROW(build_codebook(std::vector<double>{1.0, -0.1}), DomainError);
  EXPECT_THROW(build_codebook(std::vector<double>(65, 1.0)), DomainError);
  EXPECT_THROW(codebook_from_lengths(std::vector<std::uint8_t>{1, 1, 1}), FormatError);
}

TEST(Streams, EmptyStream) {
  const auto b = build_codebook(std::vector<double>{1, 1, 1});
  EXPECT_TRUE(pack_stream({}, b).empty());
  EXPECT_TRUE(unpack_stream({}, b, 0).empty());
}

TEST(Streams, NineOneBitCodesTakeTwoBytes) {
  const auto b = build_codebook(std::vector<double>{1, 1});
  const std::vector<std::uint8_t> labels{1, 0, 1, 1, 0, 0, 0, 1, 1};
  const auto bytes = pack_stream(labels, b);
  ASSERT_EQ(bytes.size(), 2u);
  EXPECT_EQ(bytes[0], 0b10110001);
  EXPECT_EQ(bytes[1], 0b10000000);
  EXPECT_EQ(unpack_stream(bytes, b, 9), labels);
}

TEST(Streams, HundredThousandLabelsRoundTrip) {
  std::mt19937_64 rng(72);
  const auto labels = random_labels(100000, 6, rng);
  std::vector<std::size_t> counts(6, 0);
  for (auto l : labels) ++counts[l];
  const auto b = build_codebook(counts);
  const auto bytes = pack_stream(labels, b);
  EXPECT_EQ(unpack_stream(bytes, b, labels.size()), labels);
  // Realized size is at least the entropy floor and within 1 bit plus padding.
  const double bits = 8.0 * static_cast<double>(bytes.size());
  const double h = entropy_bits(counts) * static_cast<double>(labels.size());
  EXPECT_GE(bits, h);
  EXPECT_LE(bits, h + static_cast<double>(labels.size()) + 8);
}

TEST(Streams, TruncationIsReported) {
  std::mt19937_64 rng(73);
  const auto labels = random_labels(1000, 4, rng);
  const auto b = build_codebook(std::vector<double>{1, 2, 3, 4});
  auto bytes = pack_stream(labels, b);
  bytes.resize(bytes.size() / 2);
  EXPECT_THROW(unpack_stream(bytes, b, labels.size()), TruncationError);
  BitReader r(std::vector<std::uint8_t>{});
  EXPECT_THROW(r.read_bit(), TruncationError);
}

TEST(Streams, FixedWidthAndSigns) {
  std::mt19937_64 rng(74);
  for (int width = 1; width <= 8; ++width) {
    std::vector<std::uint8_t> v(1 + 37 * width);
    for (auto& x : v) x = static_cast<std::uint8_t>(rng() & ((1u << width) - 1u));
    const auto bytes = pack_fixed(v, width);
    EXPECT_EQ(bytes.size(), (v.size() * static_cast<std::size_t>(width) + 7) / 8);
    EXPECT_EQ(unpack_fixed(bytes, width, v.size()), v);
  }
  const std::vector<std::int8_t> s{1, -1, -1, 1, 1, 1, 1, 1, -1};
  const auto sb = pack_signs(s);
  EXPECT_EQ(sb, (std::vector<std::uint8_t>{0b01100000, 0b10000000}));
  EXPECT_EQ(unpack_signs(sb, s.size()), s);
}

TEST(Streams, BitWriterReader) {
  BitWriter w;
  w.write(0b101, 3);
  w.write_bit(true);
  w.write(0xABCDEF0123ull, 40);
  EXPECT_EQ(w.bit_count(), 44u);
  const auto bytes = w.finish();
  EXPECT_EQ(bytes.size(), 6u);
  BitReader r(bytes);
  EXPECT_EQ(r.read(3), 0b101u);
  EXPECT_TRUE(r.read_bit());
  EXPECT_EQ(r.read(40), 0xABCDEF0123ull);
  EXPECT_EQ(r.position(), 44u);
}

TEST(IndexStreams, RoundTripPropertyBothModes) {
  std::mt19937_64 rng(75);
  std::uniform_int_distribution<std::size_t> len(0, 20000);
  for (int t = 0; t < 60; ++t) {
    const std::size_t groups = 2 + static_cast<std::size_t>(t % 6);
    const auto labels = random_labels(len(rng), groups, rng);
    for (bool unmasked : {false, true}) {
      const auto s = encode_labels(labels, groups, unmasked);
      EXPECT_EQ(s.count, labels.size());
      EXPECT_EQ(s.bytes.size(), (s.bits + 7) / 8);
      EXPECT_EQ(decode_labels(s), labels);
    }
  }
}

TEST(IndexStreams, UnmaskedDefaultCostsOneFlagPerElement) {
  std::vector<std::uint8_t> labels(1000, 3);
  for (std::size_t e = 0; e < 1000; e += 10) labels[e] = static_cast<std::uint8_t>(e % 3);
  const auto s = encode_labels(labels, 4, true);
  EXPECT_EQ(s.default_group, 3);
  // 1000 flags plus 100 codes over three equally frequent groups.
  std::vector<std::size_t> rest{34, 33, 33};
  const auto b = build_codebook(rest);
  EXPECT_EQ(s.bits, 1000 + static_cast<std::size_t>(34 * b.lengths[0] + 33 * b.lengths[1] + 33 * b.lengths[2]));
  EXPECT_EQ(decode_labels(s), labels);
}

TEST(Budget, FourKSquareClosedForm) {
  const auto b = storage_budget(4096, 4096, 5, 2, 0.01);
  EXPECT_NEAR(b.L_B, 1.01, 1e-15);
  EXPECT_NEAR(b.L_a, (5.0 * 16 + 16.0 * 4096) / (4096.0 * 4096.0), 1e-15);
  EXPECT_NEAR(b.L_a, 0.00391, 1e-5);
  EXPECT_NEAR(b.L_model, 1.014, 0.001);
  EXPECT_EQ(b.L_model, b.L_B + b.L_a);
  EXPECT_NEAR(b.L_i, 1.218, 1e-12);
  EXPECT_EQ(storage_budget(64, 64, 5, 2, 0.0).L_B, 1.0);
}

TEST(Budget, MatchesClosedFormForManyShapes) {
  for (std::size_t m : {8u, 100u, 513u})
    for (std::size_t n : {16u, 77u})
      for (int nu : {1, 3, 5})
        for (double p : {0.0, 0.01, 0.05}) {
          const auto b = storage_budget(m, n, nu, 2, p);
          const double mn = static_cast<double>(m * n);
          EXPECT_NEAR(b.L_model, 1 + p + (16.0 * nu + 16.0 * static_cast<double>(m)) / mn, 1e-12);
        }
  EXPECT_THROW(storage_budget(8, 8, 0, 2, 0.01), DomainError);
}

TEST(Report, LayerReportAgreesWithClosedFormAndEntropy) {
  const auto w = synth::gaussian("r", Role::kLanguage, 96, 128, 0.02, 76, {0.01, 4.0, 10.0});
  QuantConfig cfg;
  const auto layer = hybrid_quantize(w, fit_gaussian(w), 0.01, cfg, 0.01);
  const auto rep = storage_report(layer);
  const auto b = storage_budget(96, 128, 5, 2, 0.01);
  EXPECT_NEAR(rep.L_model, b.L_model, 1e-6);
  EXPECT_NEAR(rep.L_model, rep.L_B + rep.L_a, 1e-15);
  // Payload: one bit per binarized weight and N_b bits per salient weight.
  const double mn = 96.0 * 128.0;
  const double f_sal = static_cast<double>(layer.salient.size()) / mn;
  EXPECT_NEAR(rep.L_B_realized, 1.0 + f_sal, 1e-12);
  EXPECT_GE(rep.L_i + 1e-12, rep.index_entropy);
  EXPECT_LE(rep.L_i, rep.index_entropy + 1.0 + 8.0 / mn);
  // The flag is exactly "realized cost within the closed-form budget plus
  // the center table and padding allowance"; the realized salient fraction
  // can exceed p_sal when the tails are heavier than the fit.
  const double allowance = (4.0 * 16 + 24.0) / mn;
  EXPECT_EQ(rep.within_budget, rep.realized_bpw <= rep.L_B + rep.L_a + rep.L_i + allowance + 1e-12);
  EXPECT_NEAR(rep.realized_bpw, static_cast<double>(rep.realized_total_bits) / (96 * 128), 1e-15);
  EXPECT_NEAR(rep.predicted_bpw(), rep.L_model + rep.L_i, 1e-15);
}

TEST(Report, AggregateIsSizeWeighted) {
  StorageReport a, b;
  a.m = 10;
  a.n = 10;
  a.L_model = 1.0;
  a.realized_total_bits = 100;
  b.m = 30;
  b.n = 10;
  b.L_model = 2.0;
  b.realized_total_bits = 600;
  const std::vector<StorageReport> rs{a, b};
  const auto t = aggregate_reports(rs);
  EXPECT_NEAR(t.L_model, (100 * 1.0 + 300 * 2.0) / 400, 1e-15);
  EXPECT_EQ(t.realized_total_bits, 700u);
  EXPECT_EQ(t.name, "model");
}
