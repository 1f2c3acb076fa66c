#include "bivlm/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "bivlm/errors.hpp"

namespace bivlm::synth {

namespace {

std::vector<float> image_split(std::mt19937_64& rng, std::uint32_t n_img, double mass) {
  std::exponential_distribution<double> expo(1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> w(n_img);
  for (auto& v : w) v = expo(rng) * (unit(rng) < 0.05 ? 20.0 : 1.0);
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  std::vector<float> out(n_img);
  for (std::size_t k = 0; k < n_img; ++k) out[k] = static_cast<float>(mass * w[k] / total);
  return out;
}

}  // namespace

WeightMatrix gaussian(std::string name, Role role, std::size_t rows, std::size_t cols, double sigma,
                      std::uint64_t seed, const Outliers& outliers) {
  if (!(sigma >= 0.0)) throw DomainError("sigma must be >= 0");
  if (!(outliers.fraction >= 0.0 && outliers.fraction <= 1.0)) throw DomainError("outlier fraction outside [0, 1]");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<float> data(rows * cols);
  for (auto& v : data) v = static_cast<float>(sigma * normal(rng));

  const auto n_out = static_cast<std::size_t>(std::llround(outliers.fraction * static_cast<double>(data.size())));
  if (n_out > 0) {
    std::vector<std::size_t> pos(data.size());
    std::iota(pos.begin(), pos.end(), std::size_t{0});
    for (std::size_t i = 0; i < n_out; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, pos.size() - 1);
      std::swap(pos[i], pos[pick(rng)]);
    }
    std::uniform_real_distribution<double> mult(outliers.min_mult, outliers.max_mult);
    std::bernoulli_distribution negative(0.5);
    for (std::size_t i = 0; i < n_out; ++i) {
      const double mag = sigma * (outliers.min_mult == outliers.max_mult ? outliers.min_mult : mult(rng));
      data[pos[i]] = static_cast<float>(negative(rng) ? -mag : mag);
    }
  }
  return WeightMatrix(std::move(name), role, rows, cols, std::move(data));
}

AttentionTensor language_attention(std::uint32_t layer, std::uint32_t n, std::uint32_t n_img, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::gamma_distribution<double> g(2.0, 1.0);
  AttentionTensor t;
  t.layer = layer;
  t.output_tokens = n;
  t.group_sizes = {8, n_img, 16, n};
  for (std::uint32_t i = 0; i < n; ++i) {
    std::array<double, 4> raw{g(rng), n_img > 0 ? g(rng) : 0.0, g(rng), g(rng)};
    const double total = raw[0] + raw[1] + raw[2] + raw[3];
    std::array<float, 4> mass{};
    for (std::size_t k = 0; k < 3; ++k) mass[k] = static_cast<float>(raw[k] / total);
    mass[3] = static_cast<float>(1.0 - (static_cast<double>(mass[0]) + mass[1] + mass[2]));
    t.group_mass.push_back(mass);
    const auto split = image_split(rng, n_img, mass[1]);
    t.image_scores.insert(t.image_scores.end(), split.begin(), split.end());
  }
  return t;
}

AttentionTensor vision_attention(std::uint32_t layer, std::uint32_t n, std::uint32_t n_img, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  AttentionTensor t;
  t.layer = layer;
  t.output_tokens = n;
  t.group_sizes = {0, n_img, 0, 0};
  for (std::uint32_t i = 0; i < n; ++i) {
    t.group_mass.push_back({0.0f, 1.0f, 0.0f, 0.0f});
    const auto split = image_split(rng, n_img, 1.0);
    t.image_scores.insert(t.image_scores.end(), split.begin(), split.end());
  }
  return t;
}

}  // namespace bivlm::synth
