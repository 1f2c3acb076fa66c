#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "bivlm/attention.hpp"
#include "bivlm/weight_matrix.hpp"

namespace bivlm::synth {

/// Outlier injection: `fraction` of the entries (rounded, distinct positions)
/// are replaced by ±sigma·U(min_mult, max_mult) with a random sign.
struct Outliers {
  double fraction = 0.0;
  double min_mult = 10.0;
  double max_mult = 10.0;
};

/// N(0, sigma^2) entries with optional outliers. Deterministic in `seed`.
WeightMatrix gaussian(std::string name, Role role, std::size_t rows, std::size_t cols, double sigma,
                      std::uint64_t seed, const Outliers& outliers = {});

/// A layer of plausible language-model attention: n output tokens with
/// random group masses summing to 1 and image mass spread over N_img tokens
/// with a few heavy hitters.
AttentionTensor language_attention(std::uint32_t layer, std::uint32_t n, std::uint32_t n_img, std::uint64_t seed);

/// Vision-encoder layer: only image tokens, image mass 1 per output token.
AttentionTensor vision_attention(std::uint32_t layer, std::uint32_t n, std::uint32_t n_img, std::uint64_t seed);

}  // namespace bivlm::synth
