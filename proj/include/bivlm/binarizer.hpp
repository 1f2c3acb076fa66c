#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "bivlm/partitioner.hpp"
#include "bivlm/weight_matrix.hpp"

namespace bivlm {

/// One unsalient subset approximated as scale · sign(w).
struct BinarizedSubset {
  int k = 1;
  double scale = 0.0;
  /// ±1 per member, in row-major member order. sign(0) is +1.
  std::vector<std::int8_t> signs;

  std::size_t size() const { return signs.size(); }
};

/// Optimal 1-bit approximation of subset k: signs = sign(w), scale = mean |w|
/// over the members. An empty subset yields scale 0 and no signs.
BinarizedSubset binarize_subset(const WeightMatrix& matrix, const LayerPartition& partition, int k);

/// All N_uns subsets in one pass over the matrix.
std::vector<BinarizedSubset> binarize_all(const WeightMatrix& matrix, const LayerPartition& partition);

/// Squared Frobenius residual of the subset over its member positions.
double subset_error(const WeightMatrix& matrix, const LayerPartition& partition, const BinarizedSubset& subset);

/// Per-subset residuals for every unsalient subset (index k-1).
std::vector<double> subset_errors(const WeightMatrix& matrix, const LayerPartition& partition,
                                  const std::vector<BinarizedSubset>& subsets);

}  // namespace bivlm
