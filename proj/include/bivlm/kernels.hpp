#pragma once

// Data-parallel inner loops of the quantizer.
//
// `bivlm::kernels` holds the OpenMP versions used by the library. Every
// reduction is split into fixed-size blocks (or rows) whose partial results
// are combined serially in index order, so outputs are bit-identical for any
// thread count. `bivlm::kernels::serial` holds plain-loop reference versions
// with the same signatures; they are kept for tests and benchmarks only.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace bivlm::kernels {

inline constexpr std::size_t kBlock = 4096;

struct Moments {
  std::size_t count = 0;
  double mean = 0.0;
  double m2 = 0.0;  // sum of squared deviations from the mean
};

/// Per-group tallies over a label stream.
struct GroupSums {
  std::vector<std::size_t> count;
  std::vector<double> abs_sum;
  std::vector<double> sq_sum;
};

/// Row-wise relaxation of the salient members (scale/clip alternation).
/// `offsets` is CSR: members of row i are values[offsets[i] .. offsets[i+1]).
struct RelaxResult {
  std::vector<double> scales;            // one per row
  std::vector<double> relaxed;           // one per member, in [-1, 1]
  std::vector<double> residual_history;  // initial, then after every half-step
  int iterations = 0;
};

Moments moments(std::span<const float> x);

/// labels[e] = first k in 1..N with |x[e]| <= upper_bounds[k-1], else 0.
void label_groups(std::span<const float> x, std::span<const double> upper_bounds,
                  std::span<std::uint8_t> labels);

GroupSums group_sums(std::span<const float> x, std::span<const std::uint8_t> labels, std::size_t groups);

/// Per-group sum of (|x| - scales[g])^2, i.e. the residual of a sign
/// binarization with scalar scales[g].
std::vector<double> group_abs_residuals(std::span<const float> x, std::span<const std::uint8_t> labels,
                                        std::span<const double> scales);

/// offsets[i*groups + g] = members of group g in rows before i. Has
/// (rows+1)*groups entries; the last row holds the totals.
std::vector<std::size_t> row_group_offsets(std::span<const std::uint8_t> labels, std::size_t rows,
                                           std::size_t cols, std::size_t groups);

/// `iters` alternations of a_i <- sum(w*b)/sum(b^2), b <- clip(w/a_i, -1, 1),
/// starting from b = sign(w). Stops early once max|a - a_old| <= tol*max|a|
/// (tol = 0 never stops early).
RelaxResult relax_rows(std::span<const std::size_t> offsets, std::span<const double> values, int iters,
                       double tol);

/// Per row, the scale a minimizing sum_e min_c (w_e - a·c)^2 over the fixed
/// centers, found exactly by sweeping the breakpoints a = w/beta where w/a
/// crosses a midpoint beta between adjacent sorted centers (once for a >= 0,
/// once for a < 0). Writes a to scales[i] and nearest_center(w/a) to codes.
/// Ties favour a >= 0, then the smaller |a|.
void fit_row_scales(std::span<const std::size_t> offsets, std::span<const double> values,
                    std::span<const double> centers, std::span<double> scales, std::span<std::uint8_t> codes);

/// The single-row solve behind fit_row_scales; returns the scale.
double best_row_scale(std::span<const double> values, std::span<const double> centers);

/// Nearest center index; ties go to the lower index.
std::uint8_t nearest_center(double value, std::span<const double> centers);

/// Everything needed to expand a hybrid-quantized layer back to dense form.
/// Group 0 is salient (row scale times center[code]); group g > 0 is
/// subset_scales[g] times signs[g][member].
struct ScatterView {
  std::span<const std::uint8_t> labels;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::span<const double> row_scales;
  std::span<const double> centers;
  std::span<const std::uint8_t> codes;
  std::span<const double> subset_scales;              // indexed by group, entry 0 unused
  std::span<const std::span<const std::int8_t>> signs;  // indexed by group, entry 0 unused
};

void reconstruct(const ScatterView& view, std::span<float> out);

namespace serial {

Moments moments(std::span<const float> x);
void label_groups(std::span<const float> x, std::span<const double> upper_bounds,
                  std::span<std::uint8_t> labels);
GroupSums group_sums(std::span<const float> x, std::span<const std::uint8_t> labels, std::size_t groups);
std::vector<double> group_abs_residuals(std::span<const float> x, std::span<const std::uint8_t> labels,
                                        std::span<const double> scales);
std::vector<std::size_t> row_group_offsets(std::span<const std::uint8_t> labels, std::size_t rows,
                                           std::size_t cols, std::size_t groups);
RelaxResult relax_rows(std::span<const std::size_t> offsets, std::span<const double> values, int iters,
                       double tol);
void fit_row_scales(std::span<const std::size_t> offsets, std::span<const double> values,
                    std::span<const double> centers, std::span<double> scales, std::span<std::uint8_t> codes);
void reconstruct(const ScatterView& view, std::span<float> out);

}  // namespace serial

}  // namespace bivlm::kernels
