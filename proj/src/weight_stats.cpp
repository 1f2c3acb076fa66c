#include "bivlm/weight_stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "bivlm/errors.hpp"
#include "bivlm/kernels.hpp"

namespace bivlm {

GaussianFit fit_gaussian(std::span<const float> values) {
  if (values.size() < 2)
    throw DomainError("fit_gaussian needs at least 2 elements, got " + std::to_string(values.size()));
  const auto m = kernels::moments(values);
  return GaussianFit{m.mean, std::sqrt(m.m2 / static_cast<double>(m.count)), m.count};
}

GaussianFit fit_gaussian(const WeightMatrix& matrix) { return fit_gaussian(matrix.data()); }

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double probit(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("probit argument must lie in (0, 1), got " + std::to_string(p));

  // Acklam's rational approximation, relative error below 1.2e-9.
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                 1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                 6.680131188771972e+01,  -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                 -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                 3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }

  // Halley refinement. In the upper tail work with the complement so the
  // residual is not swamped by rounding of p near 1.
  const double density = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
  const double err = p < 0.5 ? normal_cdf(x) - p : (1.0 - p) - 0.5 * std::erfc(x / std::numbers::sqrt2);
  const double u = err / density;
  x -= u / (1.0 + 0.5 * x * u);
  return x;
}

std::size_t default_bin_count(std::size_t elements) {
  const auto root = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(elements))));
  return std::clamp<std::size_t>(root, 2, 512);
}

Histogram histogram(std::span<const float> values, std::size_t bins) {
  if (bins < 2) throw DomainError("histogram needs at least 2 bins");
  if (values.empty()) throw DomainError("histogram of empty data");

  const auto [min_it, max_it] = std::minmax_element(values.begin(), values.end());
  double lo = *min_it, hi = *max_it;
  if (lo == hi) {
    const double pad = std::max(std::abs(lo), 1.0) * 8.0 * std::numeric_limits<double>::epsilon();
    lo -= pad;
    hi += pad;
  }

  Histogram h;
  h.edges.resize(bins + 1);
  const double width = (hi - lo) / static_cast<double>(bins);
  for (std::size_t b = 0; b <= bins; ++b) h.edges[b] = lo + width * static_cast<double>(b);
  h.edges.back() = hi;
  h.counts.assign(bins, 0);

  for (float fv : values) {
    const double v = fv;
    // Candidate from arithmetic, then nudged so that e_b < v <= e_{b+1}.
    auto b = static_cast<std::ptrdiff_t>(std::ceil((v - lo) / width)) - 1;
    b = std::clamp<std::ptrdiff_t>(b, 0, static_cast<std::ptrdiff_t>(bins) - 1);
    while (b > 0 && v <= h.edges[b]) --b;
    while (b + 1 < static_cast<std::ptrdiff_t>(bins) && v > h.edges[b + 1]) ++b;
    ++h.counts[b];
  }
  h.total = values.size();
  return h;
}

Histogram histogram(const WeightMatrix& matrix, std::size_t bins) { return histogram(matrix.data(), bins); }

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw ValueError("kl_divergence: length mismatch");
  constexpr double kFloor = 1e-300;
  double d = 0.0;
  for (std::size_t b = 0; b < p.size(); ++b) {
    if (p[b] <= 0.0) continue;
    d += p[b] * std::log(p[b] / std::max(q[b], kFloor));
  }
  return d;
}

double kl_divergence(const Histogram& observed, const GaussianFit& fit) {
  if (observed.total == 0) throw DomainError("kl_divergence of an empty histogram");
  const std::size_t bins = observed.counts.size();

  auto cdf = [&](double x) {
    if (fit.sigma > 0.0) return normal_cdf((x - fit.mu) / fit.sigma);
    return x >= fit.mu ? 1.0 : 0.0;
  };

  std::vector<double> p(bins), q(bins);
  double q_total = 0.0;
  for (std::size_t b = 0; b < bins; ++b) {
    p[b] = static_cast<double>(observed.counts[b]) / static_cast<double>(observed.total);
    q[b] = std::max(0.0, cdf(observed.edges[b + 1]) - cdf(observed.edges[b]));
    q_total += q[b];
  }
  if (q_total > 0.0)
    for (auto& v : q) v /= q_total;
  return kl_divergence(p, q);
}

double outlier_fraction(std::span<const float> values, const GaussianFit& fit, double k) {
  if (values.empty()) return 0.0;
  const double lo = fit.mu - k * fit.sigma, hi = fit.mu + k * fit.sigma;
  std::size_t n = 0;
  for (float v : values) n += (v < lo || v > hi) ? 1 : 0;
  return static_cast<double>(n) / static_cast<double>(values.size());
}

}  // namespace bivlm
