#include "bivlm/token_pruner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "bivlm/errors.hpp"

namespace bivlm {

namespace {

constexpr double kGroupTol = 1e-6;
constexpr double kImageSumTol = 1e-4;

std::string where(const AttentionTensor& t, std::size_t token) {
  return "layer " + std::to_string(t.layer) + ", output token " + std::to_string(token);
}

void check_shape(const AttentionTensor& t) {
  if (t.group_mass.size() != t.output_tokens)
    throw ValidationError("layer " + std::to_string(t.layer) + ": group mass rows != n");
  if (t.image_scores.size() != static_cast<std::size_t>(t.output_tokens) * t.image_tokens())
    throw ValidationError("layer " + std::to_string(t.layer) + ": image score count != n*N_img");
}

}  // namespace

void validate_scores(const AttentionTensor& t) {
  check_shape(t);
  const bool vision = t.is_vision();
  for (std::size_t i = 0; i < t.output_tokens; ++i) {
    const auto& g = t.group_mass[i];
    double total = 0.0;
    for (float v : g) {
      if (!(v >= 0.0f && v <= 1.0f)) throw ValidationError(where(t, i) + ": group mass outside [0, 1]");
      total += v;
    }
    if (vision) {
      if (std::abs(g[1] - 1.0) > kGroupTol)
        throw ValidationError(where(t, i) + ": vision tensor image mass " + std::to_string(g[1]) + " != 1");
    } else if (std::abs(total - 1.0) > kGroupTol) {
      throw ValidationError(where(t, i) + ": group masses sum to " + std::to_string(total) + ", expected 1");
    }
    double image_sum = 0.0;
    for (std::size_t k = 0; k < t.image_tokens(); ++k) {
      const float s = t.image_score(i, k);
      if (!(s >= 0.0f && s <= 1.0f))
        throw ValidationError(where(t, i) + ": score of image token " + std::to_string(k) + " outside [0, 1]");
      image_sum += s;
    }
    if (t.image_tokens() > 0 && std::abs(image_sum - g[1]) > kImageSumTol)
      throw ValidationError(where(t, i) + ": image-token scores sum to " + std::to_string(image_sum) +
                            " but image mass is " + std::to_string(g[1]));
  }
}

double layer_lambda(const AttentionTensor& t) {
  if (t.image_tokens() == 0) throw DomainError("layer " + std::to_string(t.layer) + " has no image tokens");
  if (t.output_tokens == 0) throw DomainError("layer " + std::to_string(t.layer) + " has no output tokens");
  check_shape(t);
  double sum = 0.0;
  for (const auto& g : t.group_mass) sum += g[1];
  return sum / t.image_tokens();
}

std::vector<double> aggregate_token_scores(const AttentionTensor& t) {
  check_shape(t);
  std::vector<double> out(t.image_tokens(), 0.0);
  for (std::size_t i = 0; i < t.output_tokens; ++i)
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += t.image_score(i, k);
  return out;
}

std::size_t retained_count(double ratio, std::size_t n_img) {
  if (!(ratio >= 0.0 && ratio < 1.0)) throw DomainError("prune ratio must lie in [0, 1)");
  if (n_img == 0) throw DomainError("N_img must be >= 1");
  const double target = (1.0 - ratio) * static_cast<double>(n_img);
  const auto keep = static_cast<std::size_t>(std::ceil(target - 1e-9));
  return std::clamp<std::size_t>(keep, 1, n_img);
}

PruneDecision retain_mask(std::span<const double> scores, double ratio, std::size_t n_img) {
  if (scores.size() != n_img) throw DomainError("score count does not match N_img");
  const std::size_t keep = retained_count(ratio, n_img);
  std::vector<std::uint32_t> order(n_img);
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] > scores[b]; });
  order.resize(keep);
  std::sort(order.begin(), order.end());

  PruneDecision d;
  d.ratio = ratio;
  d.retained = std::move(order);
  return d;
}

std::vector<PruneDecision> prune(std::span<const AttentionTensor> layers, double ratio, std::uint32_t start_layer) {
  std::vector<PruneDecision> out;
  for (const auto& t : layers) {
    validate_scores(t);
    if (t.layer < start_layer) continue;
    const auto scores = aggregate_token_scores(t);
    auto d = retain_mask(scores, ratio, t.image_tokens());
    d.layer = t.layer;
    d.lambda = layer_lambda(t);
    out.push_back(std::move(d));
  }
  return out;
}

std::string decisions_to_json(std::span<const PruneDecision> decisions) {
  auto arr = nlohmann::json::array();
  for (const auto& d : decisions)
    arr.push_back({{"layer", d.layer}, {"lambda", d.lambda}, {"ratio", d.ratio}, {"retained", d.retained}});
  return arr.dump(2);
}

}  // namespace bivlm
