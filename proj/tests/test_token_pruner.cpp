#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <json.hpp>
#include <random>
#include <vector>

#include "bivlm/errors.hpp"
#include "bivlm/synthetic.hpp"
#include "bivlm/token_pruner.hpp"

using namespace bivlm;

namespace {

AttentionTensor language(std::vector<std::array<float, 4>> mass, std::vector<float> image, std::uint32_t n_img) {
  AttentionTensor t;
  t.output_tokens = static_cast<std::uint32_t>(mass.size());
  t.group_sizes = {2, n_img, 3, 1};
  t.group_mass = std::move(mass);
  t.image_scores = std::move(image);
  return t;
}

}  // namespace

TEST(Validate, GroupSums) {
  EXPECT_NO_THROW(validate_scores(language({{0.1f, 0.4f, 0.3f, 0.2f}}, {0.1f, 0.3f}, 2)));
  EXPECT_THROW(validate_scores(language({{0.1f, 0.4f, 0.3f, 0.18f}}, {0.1f, 0.3f}, 2)), ValidationError);
  EXPECT_THROW(validate_scores(language({{0.1f, 0.4f, 0.3f, 0.2f}}, {0.1f, 0.2f}, 2)), ValidationError);
  EXPECT_THROW(validate_scores(language({{-0.1f, 0.5f, 0.4f, 0.2f}}, {0.2f, 0.3f}, 2)), ValidationError);
}

TEST(Validate, ErrorNamesLayerAndToken) {
  auto t = language({{0.1f, 0.4f, 0.3f, 0.2f}, {0.5f, 0.2f, 0.1f, 0.1f}}, {0.1f, 0.3f, 0.1f, 0.1f}, 2);
  t.layer = 7;
  try {
    validate_scores(t);
    FAIL();
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find('7'), std::string::npos);
    EXPECT_NE(msg.find('1'), std::string::npos);
  }
}

TEST(Validate, VisionTensor) {
  EXPECT_NO_THROW(validate_scores(synth::vision_attention(0, 6, 10, 1)));
  auto t = synth::vision_attention(0, 2, 3, 2);
  t.group_mass[1][1] = 0.9f;
  EXPECT_THROW(validate_scores(t), ValidationError);
}

TEST(Lambda, Fixtures) {
  EXPECT_NEAR(layer_lambda(language({{0.2f, 0.4f, 0.3f, 0.1f}}, {0.1f, 0.3f}, 2)), 0.2, 1e-7);
  EXPECT_NEAR(layer_lambda(language({{0.3f, 0.4f, 0.2f, 0.1f}, {0.5f, 0.2f, 0.2f, 0.1f}},
                                    {0.1f, 0.2f, 0.1f, 0.05f, 0.1f, 0.05f}, 3)),
              0.2, 1e-7);
  // Uniform attention with mass M over N_img tokens.
  const float mass = 0.6f;
  EXPECT_NEAR(layer_lambda(language({{0.1f, mass, 0.2f, 0.1f}}, std::vector<float>(4, mass / 4), 4)), mass / 4.0,
              1e-7);
  AttentionTensor empty;
  EXPECT_THROW(layer_lambda(empty), DomainError);
}

TEST(Lambda, InvariantUnderOutputTokenPermutation) {
  auto t = synth::language_attention(3, 12, 20, 5);
  const double before = layer_lambda(t);
  std::vector<std::size_t> perm(t.output_tokens);
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(6);
  std::shuffle(perm.begin(), perm.end(), rng);
  auto u = t;
  for (std::size_t i = 0; i < perm.size(); ++i) {
    u.group_mass[i] = t.group_mass[perm[i]];
    std::copy_n(t.image_scores.begin() + static_cast<std::ptrdiff_t>(perm[i] * 20), 20,
                u.image_scores.begin() + static_cast<std::ptrdiff_t>(i * 20));
  }
  EXPECT_NEAR(layer_lambda(u), before, 1e-12);
}

TEST(Retain, Examples) {
  const std::vector<double> s{0.1, 0.5, 0.2, 0.2};
  EXPECT_EQ(retain_mask(s, 0.0, 4).retained, (std::vector<std::uint32_t>{0, 1, 2, 3}));
  EXPECT_EQ(retain_mask(s, 0.75, 4).retained, (std::vector<std::uint32_t>{1}));
  EXPECT_EQ(retain_mask(s, 0.5, 4).retained, (std::vector<std::uint32_t>{1, 2}));
  const std::vector<double> eq(4, 0.25);
  EXPECT_EQ(retain_mask(eq, 0.5, 4).retained, (std::vector<std::uint32_t>{0, 1}));
  EXPECT_THROW(retain_mask(s, 1.0, 4), DomainError);
  EXPECT_THROW(retain_mask(s, 0.5, 5), DomainError);
}

TEST(Retain, CountFormulaSweep) {
  for (std::size_t n = 1; n <= 10000; n += (n < 100 ? 1 : 97))
    for (double r : {0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95, 0.99, 0.999}) {
      const auto k = retained_count(r, n);
      const auto want = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil((1 - r) * n - 1e-9)));
      EXPECT_EQ(k, want) << n << ' ' << r;
      EXPECT_GE(k, 1u);
      EXPECT_LE(k, n);
    }
}

TEST(Retain, NestedAsRatioGrows) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> level(0, 9);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> s(1 + t);
    for (auto& x : s) x = level(rng) / 10.0;
    std::vector<std::uint32_t> prev;
    bool first = true;
    for (double r : {0.0, 0.25, 0.5, 0.75, 0.95, 0.99}) {
      const auto d = retain_mask(s, r, s.size());
      EXPECT_TRUE(std::is_sorted(d.retained.begin(), d.retained.end()));
      if (!first) EXPECT_TRUE(std::includes(prev.begin(), prev.end(), d.retained.begin(), d.retained.end()));
      // Every kept score is at least every dropped one.
      double min_kept = 1e9;
      for (auto i : d.retained) min_kept = std::min(min_kept, s[i]);
      for (std::size_t i = 0; i < s.size(); ++i)
        if (!std::binary_search(d.retained.begin(), d.retained.end(), static_cast<std::uint32_t>(i)))
          EXPECT_LE(s[i], min_kept);
      prev = d.retained;
      first = false;
    }
  }
}

TEST(Prune, StartLayerAndJson) {
  std::vector<AttentionTensor> layers;
  for (std::uint32_t j = 0; j < 4; ++j) layers.push_back(synth::language_attention(j, 5, 16, 10 + j));
  const auto d = prune(layers, 0.5, 2);
  ASSERT_EQ(d.size(), 2u);
  EXPECT_EQ(d[0].layer, 2u);
  EXPECT_EQ(d[1].layer, 3u);
  EXPECT_EQ(d[0].retained.size(), 8u);
  EXPECT_NEAR(d[0].lambda, layer_lambda(layers[2]), 1e-15);
  const auto scores = aggregate_token_scores(layers[2]);
  EXPECT_EQ(d[0].retained, retain_mask(scores, 0.5, 16).retained);

  const auto j = nlohmann::json::parse(decisions_to_json(d));
  ASSERT_TRUE(j.is_array());
  EXPECT_EQ(j[0]["layer"], 2);
  EXPECT_EQ(j[1]["retained"].size(), 8u);
  EXPECT_DOUBLE_EQ(j[0]["ratio"].get<double>(), 0.5);
}

TEST(Prune, InvalidLayerStopsEverything) {
  std::vector<AttentionTensor> layers{synth::language_attention(0, 3, 4, 1), synth::language_attention(1, 3, 4, 2)};
  layers[0].group_mass[0][0] += 0.05f;
  EXPECT_THROW(prune(layers, 0.5, 1), ValidationError);
}
