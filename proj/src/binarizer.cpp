#include "bivlm/binarizer.hpp"

#include <cmath>
#include <string>

#include "bivlm/errors.hpp"
#include "bivlm/kernels.hpp"

namespace bivlm {

namespace {

void check_group(const LayerPartition& partition, int k) {
  if (k < 1 || k > partition.spec.n_uns)
    throw DomainError("subset index " + std::to_string(k) + " outside 1.." + std::to_string(partition.spec.n_uns));
}

}  // namespace

BinarizedSubset binarize_subset(const WeightMatrix& matrix, const LayerPartition& partition, int k) {
  check_group(partition, k);
  BinarizedSubset out;
  out.k = k;
  out.signs.reserve(partition.counts[static_cast<std::size_t>(k)]);
  double abs_sum = 0.0;
  const auto data = matrix.data();
  for (std::size_t e = 0; e < data.size(); ++e) {
    if (partition.labels[e] != k) continue;
    abs_sum += std::abs(static_cast<double>(data[e]));
    out.signs.push_back(data[e] < 0.0f ? std::int8_t{-1} : std::int8_t{1});
  }
  if (!out.signs.empty()) out.scale = abs_sum / static_cast<double>(out.signs.size());
  return out;
}

std::vector<BinarizedSubset> binarize_all(const WeightMatrix& matrix, const LayerPartition& partition) {
  const auto n_uns = static_cast<std::size_t>(partition.spec.n_uns);
  const auto sums = kernels::group_sums(matrix.data(), partition.labels, n_uns + 1);

  std::vector<BinarizedSubset> out(n_uns);
  for (std::size_t k = 1; k <= n_uns; ++k) {
    out[k - 1].k = static_cast<int>(k);
    out[k - 1].signs.reserve(sums.count[k]);
    if (sums.count[k] > 0) out[k - 1].scale = sums.abs_sum[k] / static_cast<double>(sums.count[k]);
  }
  const auto data = matrix.data();
  for (std::size_t e = 0; e < data.size(); ++e) {
    const auto g = partition.labels[e];
    if (g == kSalient) continue;
    out[g - 1].signs.push_back(data[e] < 0.0f ? std::int8_t{-1} : std::int8_t{1});
  }
  return out;
}

double subset_error(const WeightMatrix& matrix, const LayerPartition& partition, const BinarizedSubset& subset) {
  check_group(partition, subset.k);
  double err = 0.0;
  std::size_t m = 0;
  const auto data = matrix.data();
  for (std::size_t e = 0; e < data.size(); ++e) {
    if (partition.labels[e] != subset.k) continue;
    const double d = static_cast<double>(data[e]) - subset.scale * subset.signs[m++];
    err += d * d;
  }
  return err;
}

std::vector<double> subset_errors(const WeightMatrix& matrix, const LayerPartition& partition,
                                  const std::vector<BinarizedSubset>& subsets) {
  std::vector<double> scales(partition.groups(), 0.0);
  for (const auto& s : subsets) scales[static_cast<std::size_t>(s.k)] = s.scale;
  auto residuals = kernels::group_abs_residuals(matrix.data(), partition.labels, scales);
  return {residuals.begin() + 1, residuals.end()};
}

}  // namespace bivlm
