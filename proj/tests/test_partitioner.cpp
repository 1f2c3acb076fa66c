#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "bivlm/errors.hpp"
#include "bivlm/partitioner.hpp"
#include "bivlm/synthetic.hpp"
#include "oracles.hpp"

using namespace bivlm;

TEST(Cutoffs, Examples) {
  const auto one = compute_cutoffs(0.05, 1);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_NEAR(one[0], 1.959964, 1e-4);
  EXPECT_NEAR(one[0], static_cast<double>(oracle::probit(0.975L)), 1e-9);

  const auto zero = compute_cutoffs(0.0, 1);
  // The clamp is applied in double, so the oracle gets the same rounded argument.
  EXPECT_NEAR(zero[0], static_cast<double>(oracle::probit(static_cast<long double>(1.0 - 1e-12))), 1e-6);
  EXPECT_NEAR(zero[0], 7.03, 0.01);

  const auto three = compute_cutoffs(0.1, 3);
  ASSERT_EQ(three.size(), 3u);
  EXPECT_LT(three[0], three[1]);
  EXPECT_LT(three[1], three[2]);
  for (int k = 1; k <= 3; ++k) {
    const long double arg = (1.0L + k * (0.9L / 3.0L)) / 2.0L;
    EXPECT_NEAR(three[k - 1], static_cast<double>(oracle::probit(arg)), 1e-9);
  }
}

TEST(Cutoffs, DomainErrors) {
  EXPECT_THROW(compute_cutoffs(1.0, 3), DomainError);
  EXPECT_THROW(compute_cutoffs(-0.1, 3), DomainError);
  EXPECT_THROW(compute_cutoffs(0.1, 0), DomainError);
}

TEST(Partition, SalientFractionOfStandardNormal) {
  const auto w = synth::gaussian("n", Role::kLanguage, 1000, 1000, 1.0, 5);
  const auto p = partition(w, fit_gaussian(w), 0.05, 1);
  EXPECT_NEAR(p.realized_fraction(kSalient), 0.05, 0.002);
}

TEST(Partition, ZeroFractionLeavesNothingSalient) {
  const auto w = synth::gaussian("n", Role::kLanguage, 300, 300, 1.0, 6);
  const auto p = partition(w, fit_gaussian(w), 0.0, 5);
  EXPECT_EQ(p.salient_count(), 0u);
}

TEST(Partition, ConstantMatrixIsOneGroup) {
  const WeightMatrix w("c", Role::kLanguage, 3, 4, std::vector<float>(12, 0.25f));
  const auto p = partition(w, fit_gaussian(w), 0.05, 5);
  EXPECT_EQ(p.counts[1], 12u);
  EXPECT_EQ(p.spec.p_sal, 0.0);
  for (auto l : p.labels) EXPECT_EQ(l, 1);
}

TEST(Partition, CoverDisjointAndLabelRule) {
  const auto w = synth::gaussian("o", Role::kLanguage, 64, 80, 0.3, 7, {0.02, 3.0, 8.0});
  const auto fit = fit_gaussian(w);
  for (double p_sal : {0.0, 0.01, 0.05, 0.2}) {
    for (int n : {1, 3, 5}) {
      const auto part = partition(w, fit, p_sal, n);
      std::size_t total = 0;
      for (auto c : part.counts) total += c;
      EXPECT_EQ(total, w.size());
      std::vector<std::size_t> recount(static_cast<std::size_t>(n) + 1, 0);
      for (std::size_t e = 0; e < w.size(); ++e) {
        const double m = std::fabs(w.data()[e]);
        std::uint8_t want = kSalient;
        for (int k = n; k >= 1; --k)
          if (m <= part.spec.upper_bound(k)) want = static_cast<std::uint8_t>(k);
        ASSERT_EQ(part.labels[e], want);
        ++recount[part.labels[e]];
      }
      EXPECT_EQ(recount, part.counts);
    }
  }
}

TEST(Partition, MonotoneSaliency) {
  const auto w = synth::gaussian("m", Role::kLanguage, 90, 90, 1.0, 8, {0.01, 4.0, 9.0});
  const auto fit = fit_gaussian(w);
  const double grid[] = {0.0, 0.001, 0.01, 0.02, 0.05, 0.1, 0.3};
  for (std::size_t g = 1; g < std::size(grid); ++g) {
    const auto lo = partition(w, fit, grid[g - 1], 5);
    const auto hi = partition(w, fit, grid[g], 5);
    for (std::size_t e = 0; e < w.size(); ++e)
      if (lo.labels[e] == kSalient) ASSERT_EQ(hi.labels[e], kSalient);
  }
}

TEST(Partition, ScalingLeavesLabelsUnchanged) {
  const auto w = synth::gaussian("s", Role::kLanguage, 50, 70, 1.0, 9, {0.01, 4.0, 9.0});
  std::vector<float> scaled(w.data().begin(), w.data().end());
  for (auto& v : scaled) v *= 4.0f;
  const WeightMatrix w4("s4", Role::kLanguage, 50, 70, scaled);
  const auto a = partition(w, fit_gaussian(w), 0.03, 5);
  const auto b = partition(w4, fit_gaussian(w4), 0.03, 5);
  EXPECT_EQ(a.labels, b.labels);
}

TEST(Partition, GaussianSubsetFractionsWithinThreeStandardErrors) {
  const auto w = synth::gaussian("g", Role::kLanguage, 1000, 1000, 1.0, 10);
  const auto part = partition(w, fit_gaussian(w), 0.05, 5);
  const double n = static_cast<double>(w.size());
  const double p_uns = 0.95 / 5;
  for (int k = 1; k <= 5; ++k) {
    const double se = std::sqrt(p_uns * (1 - p_uns) / n);
    EXPECT_LT(std::fabs(part.realized_fraction(static_cast<std::uint8_t>(k)) - p_uns), 3 * se) << k;
  }
}

TEST(Partition, TiesGoToTheLowerSubset) {
  // mu is chosen so that mu + sigma·z^(1) equals the float f exactly
  // (f - z is exact by Sterbenz, and adding z back rounds to f).
  const double z = compute_cutoffs(0.5, 1)[0];
  const float f = static_cast<float>(z);
  const GaussianFit fit{static_cast<double>(f) - z, 1.0, 4};
  ASSERT_EQ(fit.mu + fit.sigma * z, static_cast<double>(f));
  const WeightMatrix w("t", Role::kLanguage, 1, 4, {-f, f, std::nextafter(f, 10.0f), 0.0f});
  const auto p = partition(w, fit, 0.5, 1);
  EXPECT_EQ(p.labels, (std::vector<std::uint8_t>{1, 1, kSalient, 1}));
}
