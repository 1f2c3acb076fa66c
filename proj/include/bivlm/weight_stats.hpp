#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "bivlm/weight_matrix.hpp"

namespace bivlm {

struct GaussianFit {
  double mu = 0.0;
  double sigma = 0.0;  // population standard deviation
  std::size_t count = 0;
};

/// Equal-width histogram. Bins are right-closed, (e_b, e_{b+1}], except the
/// first which is closed on both ends.
struct Histogram {
  std::vector<double> edges;
  std::vector<std::size_t> counts;
  std::size_t total = 0;
};

/// Sample mean and population standard deviation of all entries.
/// Throws DomainError for fewer than two elements.
GaussianFit fit_gaussian(const WeightMatrix& matrix);
GaussianFit fit_gaussian(std::span<const float> values);

/// Standard normal CDF.
double normal_cdf(double z);

/// Inverse standard normal CDF on (0, 1); throws DomainError outside.
/// Rational approximation polished with one Halley step.
double probit(double p);

std::size_t default_bin_count(std::size_t elements);

/// Throws DomainError if bins < 2 or the input is empty. Constant data gets
/// edges widened symmetrically by a few ulps so the range is non-empty.
Histogram histogram(std::span<const float> values, std::size_t bins);
Histogram histogram(const WeightMatrix& matrix, std::size_t bins);

/// KL(observed || fit) in nats. The fit's mass per bin comes from CDF
/// differences, renormalised over the histogram range; empty observed bins
/// contribute nothing and zero model mass is floored at 1e-300.
double kl_divergence(const Histogram& observed, const GaussianFit& fit);

/// Discrete KL(p || q) in nats for two probability vectors of equal length.
double kl_divergence(std::span<const double> p, std::span<const double> q);

/// Fraction of values outside mu ± k·sigma.
double outlier_fraction(std::span<const float> values, const GaussianFit& fit, double k = 3.0);

}  // namespace bivlm
