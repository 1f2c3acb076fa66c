#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "bivlm/kernels.hpp"
#include "bivlm/partitioner.hpp"
#include "bivlm/weight_matrix.hpp"

namespace bivlm {

/// Salient elements in CSR form: row i owns values[offsets[i] .. offsets[i+1]),
/// columns ascending, so member order is row-major.
struct SalientMembers {
  std::vector<std::size_t> offsets;
  std::vector<std::size_t> columns;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
};

SalientMembers gather_salient(const WeightMatrix& matrix, const LayerPartition& partition);

using RowwiseFit = kernels::RelaxResult;

/// Alternating row-scale / clipped-relaxation fit over the salient members.
/// Runs exactly `iters` iterations when tol = 0.
RowwiseFit fit_rowwise(const WeightMatrix& matrix, const LayerPartition& partition, int iters, double tol = 0.0);
RowwiseFit fit_rowwise(const SalientMembers& members, int iters, double tol = 0.0);

/// Exponentially adapted level grid and the midpoints used as code values.
struct LevelGrid {
  std::vector<double> levels;   // 2^N_b + 1
  std::vector<double> centers;  // 2^N_b
  double mu = 0.0;
  double sigma = 0.0;
  double alpha = 1.4;
};

/// levels(d) = mu + sigma·sign(d)·(alpha·exp|d| - 1) over 2^N_b + 1 evenly
/// spaced d in [-1, 1]; centers are consecutive midpoints.
LevelGrid adaptive_levels(double mu, double sigma, int n_bits, double alpha);
/// mu and sigma (population) taken from the nonzero entries of `relaxed`.
/// Without any nonzero entry the grid degenerates to a single value 0.
LevelGrid adaptive_levels(std::span<const double> relaxed, int n_bits, double alpha);

/// Index of the nearest center per value; ties go to the lower index.
std::vector<std::uint8_t> assign_codes(std::span<const double> relaxed, std::span<const double> centers);

struct SalientOptions {
  int n_bits = 2;
  double alpha = 1.4;
  int iters = 15;
  double tol = 1e-8;
  /// After the relaxed fit, replace each row scale by the exact minimizer of
  /// the row residual over the level grid and reassign codes to match.
  bool refine = true;
};

struct SalientQuant {
  std::vector<double> scales;        // one per row; 0 for rows without members
  std::vector<std::uint8_t> codes;   // one per member, row-major
  LevelGrid grid;
  int n_bits = 2;
  int fit_iterations = 0;

  std::size_t size() const { return codes.size(); }
};

SalientQuant quantize_salient(const WeightMatrix& matrix, const LayerPartition& partition,
                              const SalientOptions& options = {});
SalientQuant quantize_salient(const SalientMembers& members, const SalientOptions& options = {});

/// Squared residual of scales[i]·centers[code] against the salient members.
double salient_error(const SalientMembers& members, const SalientQuant& quant);

}  // namespace bivlm
