#include "bivlm/salient_quantizer.hpp"

#include <cmath>
#include <string>

#include "bivlm/errors.hpp"

namespace bivlm {

SalientMembers gather_salient(const WeightMatrix& matrix, const LayerPartition& partition) {
  SalientMembers out;
  out.offsets.assign(matrix.rows() + 1, 0);
  out.columns.reserve(partition.salient_count());
  out.values.reserve(partition.salient_count());
  for (std::size_t i = 0; i < matrix.rows(); ++i) {
    for (std::size_t j = 0; j < matrix.cols(); ++j) {
      if (partition.labels[i * matrix.cols() + j] != kSalient) continue;
      out.columns.push_back(j);
      out.values.push_back(matrix(i, j));
    }
    out.offsets[i + 1] = out.values.size();
  }
  return out;
}

RowwiseFit fit_rowwise(const SalientMembers& members, int iters, double tol) {
  if (iters < 1) throw DomainError("fit_rowwise needs iters >= 1");
  return kernels::relax_rows(members.offsets, members.values, iters, tol);
}

RowwiseFit fit_rowwise(const WeightMatrix& matrix, const LayerPartition& partition, int iters, double tol) {
  return fit_rowwise(gather_salient(matrix, partition), iters, tol);
}

LevelGrid adaptive_levels(double mu, double sigma, int n_bits, double alpha) {
  if (n_bits < 1 || n_bits > 8) throw DomainError("N_b must lie in [1, 8], got " + std::to_string(n_bits));
  if (!(alpha > 0.0)) throw DomainError("alpha must be positive");

  const std::size_t n_levels = (std::size_t{1} << n_bits) + 1;
  LevelGrid g;
  g.mu = mu;
  g.sigma = sigma;
  g.alpha = alpha;
  g.levels.resize(n_levels);
  for (std::size_t j = 0; j < n_levels; ++j) {
    const double d = -1.0 + 2.0 * static_cast<double>(j) / static_cast<double>(n_levels - 1);
    const double sign = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
    g.levels[j] = sigma == 0.0 ? mu : mu + sigma * sign * (alpha * std::exp(std::abs(d)) - 1.0);
  }
  g.centers.resize(n_levels - 1);
  for (std::size_t j = 0; j + 1 < n_levels; ++j) g.centers[j] = 0.5 * (g.levels[j] + g.levels[j + 1]);
  return g;
}

LevelGrid adaptive_levels(std::span<const double> relaxed, int n_bits, double alpha) {
  double sum = 0.0;
  std::size_t n = 0;
  for (double b : relaxed)
    if (b != 0.0) {
      sum += b;
      ++n;
    }
  if (n == 0) return adaptive_levels(0.0, 0.0, n_bits, alpha);
  const double mu = sum / static_cast<double>(n);
  double m2 = 0.0;
  for (double b : relaxed)
    if (b != 0.0) m2 += (b - mu) * (b - mu);
  return adaptive_levels(mu, std::sqrt(m2 / static_cast<double>(n)), n_bits, alpha);
}

std::vector<std::uint8_t> assign_codes(std::span<const double> relaxed, std::span<const double> centers) {
  if (centers.empty()) throw DomainError("assign_codes needs at least one center");
  std::vector<std::uint8_t> codes(relaxed.size());
  for (std::size_t e = 0; e < relaxed.size(); ++e) codes[e] = kernels::nearest_center(relaxed[e], centers);
  return codes;
}

SalientQuant quantize_salient(const SalientMembers& members, const SalientOptions& options) {
  SalientQuant q;
  q.n_bits = options.n_bits;
  const std::size_t rows = members.offsets.empty() ? 0 : members.offsets.size() - 1;
  if (members.size() == 0) {
    q.scales.assign(rows, 0.0);
    q.grid = adaptive_levels(0.0, 0.0, options.n_bits, options.alpha);
    return q;
  }

  auto fit = fit_rowwise(members, options.iters, options.tol);
  q.fit_iterations = fit.iterations;
  q.grid = adaptive_levels(fit.relaxed, options.n_bits, options.alpha);
  q.codes = assign_codes(fit.relaxed, q.grid.centers);
  q.scales = std::move(fit.scales);
  if (options.refine)
    kernels::fit_row_scales(members.offsets, members.values, q.grid.centers, q.scales, q.codes);
  return q;
}

SalientQuant quantize_salient(const WeightMatrix& matrix, const LayerPartition& partition,
                              const SalientOptions& options) {
  return quantize_salient(gather_salient(matrix, partition), options);
}

double salient_error(const SalientMembers& members, const SalientQuant& quant) {
  double err = 0.0;
  const std::size_t rows = members.offsets.empty() ? 0 : members.offsets.size() - 1;
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t e = members.offsets[i]; e < members.offsets[i + 1]; ++e) {
      const double d = members.values[e] - quant.scales[i] * quant.grid.centers[quant.codes[e]];
      err += d * d;
    }
  return err;
}

}  // namespace bivlm
