#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "bivlm/weight_matrix.hpp"
#include "bivlm/weight_stats.hpp"

namespace bivlm {

/// Group code of the salient set. Unsalient subset k (1-based) has code k.
inline constexpr std::uint8_t kSalient = 0;

/// Largest probit argument used for cutoffs; keeps z finite when p_sal = 0.
inline constexpr double kMaxQuantile = 1.0 - 1e-12;

struct PartitionSpec {
  double p_sal = 0.0;
  int n_uns = 1;
  std::vector<double> z_cutoffs;  // z^(1) .. z^(N_uns), strictly increasing
  double mu = 0.0;
  double sigma = 0.0;

  double p_uns() const { return (1.0 - p_sal) / n_uns; }
  /// Magnitude upper bound of subset k (1-based): mu + sigma·z^(k).
  double upper_bound(int k) const { return mu + sigma * z_cutoffs[static_cast<std::size_t>(k - 1)]; }
};

/// Per-element group labels over a row-major m×n matrix.
struct LayerPartition {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> labels;
  std::vector<std::size_t> counts;  // indexed by group code, N_uns + 1 entries
  PartitionSpec spec;

  std::size_t groups() const { return counts.size(); }
  std::size_t salient_count() const { return counts[kSalient]; }
  double realized_fraction(std::uint8_t group) const {
    return labels.empty() ? 0.0 : static_cast<double>(counts[group]) / static_cast<double>(labels.size());
  }
};

/// z^(k) = probit(min((1 + k·p_uns)/2, kMaxQuantile)) for k = 1..N_uns.
/// Throws DomainError unless 0 <= p_sal < 1 and N_uns >= 1.
std::vector<double> compute_cutoffs(double p_sal, int n_uns);

/// Labels every element: UNS(1) for |w| <= mu + sigma·z^(1) (lower bound 0),
/// UNS(k) for mu + sigma·z^(k-1) < |w| <= mu + sigma·z^(k), SALIENT above
/// the last cutoff. A zero-sigma fit puts everything in UNS(1) with p_sal 0.
LayerPartition partition(const WeightMatrix& matrix, const GaussianFit& fit, double p_sal, int n_uns);

}  // namespace bivlm
