#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bivlm/attention.hpp"

namespace bivlm {

struct PruneDecision {
  std::uint32_t layer = 0;
  double lambda = 0.0;
  std::vector<std::uint32_t> retained;  // ascending image-token indices
  double ratio = 0.0;
};

/// Throws ValidationError naming layer and token when a score lies outside
/// [0, 1], a language tensor's four group masses do not sum to 1 (± 1e-6), a
/// vision tensor's image mass is not 1, or a token's per-image scores do not
/// add up to its image mass (± 1e-4).
void validate_scores(const AttentionTensor& t);

/// Sum over output tokens of the image-group mass, divided by N_img.
/// Throws DomainError when N_img or n is 0.
double layer_lambda(const AttentionTensor& t);

/// Per image token, the attention it receives summed over output tokens.
std::vector<double> aggregate_token_scores(const AttentionTensor& t);

/// max(1, ceil((1 - ratio)·N_img)). Throws DomainError unless 0 <= ratio < 1
/// and N_img >= 1.
std::size_t retained_count(double ratio, std::size_t n_img);

/// Keeps the retained_count highest scores; equal scores favour the lower
/// index. Throws DomainError if scores.size() != N_img.
PruneDecision retain_mask(std::span<const double> scores, double ratio, std::size_t n_img);

/// Validates every tensor, then decides for each layer j >= start_layer.
std::vector<PruneDecision> prune(std::span<const AttentionTensor> layers, double ratio, std::uint32_t start_layer);

/// JSON array of {"layer", "lambda", "ratio", "retained": [...]}.
std::string decisions_to_json(std::span<const PruneDecision> decisions);

}  // namespace bivlm
