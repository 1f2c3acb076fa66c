#pragma once

#include <functional>
#include <span>
#include <vector>

#include "bivlm/hybrid.hpp"
#include "bivlm/weight_matrix.hpp"
#include "bivlm/weight_stats.hpp"

namespace bivlm {

struct ObjectiveEval {
  double p_sal = 0.0;
  double J = 0.0;  // (salient + unsalient residual) / ||W||^2
  double salient_residual = 0.0;
  std::vector<double> unsalient_residuals;
  double norm_sq = 0.0;
};

/// Normalized reconstruction error of the hybrid quantizer at p_sal.
/// Throws DomainError for an all-zero matrix or p_sal outside [0, 1).
ObjectiveEval evaluate_objective(const WeightMatrix& matrix, const GaussianFit& fit, double p_sal,
                                 const QuantConfig& config);

struct BrentResult {
  double x = 0.0;
  double fx = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
};

/// Bounded scalar minimization: parabolic interpolation with golden-section
/// fallback. f is only ever evaluated inside [lo, hi]. Stops when the
/// bracket is narrower than tol (plus a relative 4·eps·|x| term) or after
/// max_iters steps. Throws OptimizationError on a non-finite f value and
/// DomainError unless lo < hi and tol > 0.
BrentResult brent_minimize(const std::function<double(double)>& f, double lo, double hi, double tol, int max_iters);

/// Golden-section step bound ceil(log((hi-lo)/tol) / log(1/0.381966)) + 2.
int golden_iteration_bound(double lo, double hi, double tol);

struct SaliencyResult {
  double p_sal = 0.0;
  double J = 0.0;
  double J_at_zero = 0.0;
  double J_at_max = 0.0;
  double p_sal_max = 0.0;
  BrentResult brent;
  int evaluations = 0;  // distinct objective evaluations after memoization
};

/// Brent search of J over [0, p_sal_max] with tol 1e-4·p_sal_max and at most
/// 50 steps, memoized on p rounded to 1e-6. Returns the best of the interior
/// result and both bounds; ties favour the smaller p.
SaliencyResult optimize_saliency(const WeightMatrix& matrix, const GaussianFit& fit, const QuantConfig& config,
                                 double p_sal_max);

struct SweepPoint {
  double threshold = 0.0;
  double p_sal_opt = 0.0;
  double J_opt = 0.0;    // optimized with p_sal_max = threshold
  double J_fixed = 0.0;  // evaluated at p_sal = threshold
};

SweepPoint sweep_point(const WeightMatrix& matrix, const GaussianFit& fit, const QuantConfig& config,
                       double threshold);
std::vector<SweepPoint> sweep(const WeightMatrix& matrix, const GaussianFit& fit, const QuantConfig& config,
                              std::span<const double> thresholds);

}  // namespace bivlm
