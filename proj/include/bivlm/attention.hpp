#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace bivlm {

/// Token groups of a language-model prompt, in storage order.
enum class TokenGroup : std::size_t { kSystem = 0, kImage = 1, kInstruction = 2, kOutput = 3 };

/// Attention recorded at one layer: for each of the n output tokens, the
/// mass placed on each token group and on each individual image token.
/// A vision-encoder tensor has only image tokens (all other group sizes 0).
struct AttentionTensor {
  std::uint32_t layer = 0;
  std::uint32_t output_tokens = 0;                // n
  std::array<std::uint32_t, 4> group_sizes{};     // N_sys, N_img, N_ins, N_out
  std::vector<std::array<float, 4>> group_mass;   // n rows
  std::vector<float> image_scores;                // n × N_img, row-major

  std::uint32_t image_tokens() const { return group_sizes[1]; }
  bool is_vision() const { return group_sizes[0] == 0 && group_sizes[2] == 0 && group_sizes[3] == 0; }
  float image_score(std::size_t out_token, std::size_t img_token) const {
    return image_scores[out_token * image_tokens() + img_token];
  }
};

}  // namespace bivlm
