#include "bivlm/partitioner.hpp"

#include <algorithm>
#include <string>

#include "bivlm/errors.hpp"
#include "bivlm/kernels.hpp"

namespace bivlm {

std::vector<double> compute_cutoffs(double p_sal, int n_uns) {
  if (!(p_sal >= 0.0 && p_sal < 1.0))
    throw DomainError("salient fraction must lie in [0, 1), got " + std::to_string(p_sal));
  if (n_uns < 1 || n_uns > 254) throw DomainError("N_uns must lie in [1, 254], got " + std::to_string(n_uns));

  const double p_uns = (1.0 - p_sal) / n_uns;
  std::vector<double> z(static_cast<std::size_t>(n_uns));
  for (int k = 1; k <= n_uns; ++k) z[k - 1] = probit(std::min((1.0 + k * p_uns) / 2.0, kMaxQuantile));
  return z;
}

LayerPartition partition(const WeightMatrix& matrix, const GaussianFit& fit, double p_sal, int n_uns) {
  LayerPartition out;
  out.rows = matrix.rows();
  out.cols = matrix.cols();
  out.labels.resize(matrix.size());
  out.spec.mu = fit.mu;
  out.spec.sigma = fit.sigma;
  out.spec.n_uns = n_uns;

  if (fit.sigma == 0.0) {
    compute_cutoffs(p_sal, n_uns);  // argument validation only
    out.spec.p_sal = 0.0;
    out.spec.z_cutoffs = compute_cutoffs(0.0, n_uns);
    std::fill(out.labels.begin(), out.labels.end(), std::uint8_t{1});
    out.counts.assign(static_cast<std::size_t>(n_uns) + 1, 0);
    out.counts[1] = matrix.size();
    return out;
  }

  out.spec.p_sal = p_sal;
  out.spec.z_cutoffs = compute_cutoffs(p_sal, n_uns);
  std::vector<double> bounds(static_cast<std::size_t>(n_uns));
  for (int k = 1; k <= n_uns; ++k) bounds[k - 1] = out.spec.upper_bound(k);

  kernels::label_groups(matrix.data(), bounds, out.labels);
  out.counts = kernels::group_sums(matrix.data(), out.labels, bounds.size() + 1).count;
  return out;
}

}  // namespace bivlm
