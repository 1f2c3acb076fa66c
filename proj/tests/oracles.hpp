#pragma once

// Independent reference computations used by the tests. Nothing here calls
// into the library.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

namespace oracle {

/// erf(x) for x >= 0 from the all-positive series
///   erf(x) = 2/sqrt(pi)·exp(-x^2)·sum_n 2^n x^(2n+1) / (1·3·...·(2n+1)).
inline long double erf_series(long double x) {
  const long double pi = 3.141592653589793238462643383279502884L;
  long double term = x;
  long double sum = x;
  for (int n = 1; n < 2000; ++n) {
    term *= 2.0L * x * x / (2.0L * n + 1.0L);
    sum += term;
    if (term < sum * 1e-22L) break;
  }
  return 2.0L / std::sqrt(pi) * std::exp(-x * x) * sum;
}

/// erfc(x) for x >= 3 from the Laplace continued fraction, evaluated
/// bottom-up; avoids the cancellation of 1 - erf(x) in the tail.
inline long double erfc_cf(long double x) {
  const long double pi = 3.141592653589793238462643383279502884L;
  long double t = x;
  for (int n = 400; n >= 1; --n) t = x + (n / 2.0L) / t;
  return std::exp(-x * x) / std::sqrt(pi) / t;
}

/// Standard normal CDF: the series near the centre, the continued fraction
/// for the lower tail.
inline long double normal_cdf(long double z) {
  const long double x = std::fabs(z) / std::sqrt(2.0L);
  if (z < 0 && x >= 3.0L) return 0.5L * erfc_cf(x);
  const long double e = erf_series(x);
  return z >= 0 ? 0.5L * (1.0L + e) : 0.5L * (1.0L - e);
}

/// Inverse CDF by bisection on normal_cdf.
inline long double probit(long double p) {
  long double lo = -40.0L, hi = 40.0L;
  for (int i = 0; i < 200; ++i) {
    const long double mid = 0.5L * (lo + hi);
    (normal_cdf(mid) < p ? lo : hi) = mid;
  }
  return 0.5L * (lo + hi);
}

/// Smallest squared error of s·b over every sign vector b in {-1,1}^n and
/// every scalar s: per pattern the least-squares s, plus a dense grid of s.
inline double best_binarization(const std::vector<double>& w, int grid = 400) {
  const std::size_t n = w.size();
  double max_abs = 0.0;
  for (double v : w) max_abs = std::max(max_abs, std::abs(v));
  double best = std::numeric_limits<double>::infinity();
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    double dot = 0.0;
    for (std::size_t e = 0; e < n; ++e) dot += ((mask >> e) & 1u) ? -w[e] : w[e];
    const double s_ls = dot / static_cast<double>(n);
    auto err = [&](double s) {
      double r = 0.0;
      for (std::size_t e = 0; e < n; ++e) {
        const double b = ((mask >> e) & 1u) ? -1.0 : 1.0;
        r += (w[e] - s * b) * (w[e] - s * b);
      }
      return r;
    };
    best = std::min(best, err(s_ls));
    for (int g = 0; g <= grid; ++g) best = std::min(best, err(2.0 * max_abs * g / grid));
  }
  return best;
}

/// Minimum expected code length over all prefix codes (lengths 1..G-1 with
/// Kraft sum <= 1) for symbols of positive frequency. Exhaustive, G <= 7.
inline double optimal_prefix_length(const std::vector<double>& freq) {
  std::vector<double> f;
  for (double x : freq)
    if (x > 0.0) f.push_back(x);
  if (f.size() <= 1) return 0.0;
  double total = 0.0;
  for (double x : f) total += x;
  const int max_len = static_cast<int>(f.size()) - 1;
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> len(f.size(), 1);
  std::function<void(std::size_t)> rec = [&](std::size_t i) {
    if (i == f.size()) {
      double kraft = 0.0, avg = 0.0;
      for (std::size_t s = 0; s < f.size(); ++s) {
        kraft += std::ldexp(1.0, -len[s]);
        avg += f[s] * len[s];
      }
      if (kraft <= 1.0 + 1e-12) best = std::min(best, avg / total);
      return;
    }
    for (int l = 1; l <= max_len; ++l) {
      len[i] = l;
      rec(i + 1);
    }
  };
  rec(0);
  return best;
}

/// Smallest value of f on an evenly spaced grid of `points` over [lo, hi].
inline double grid_min(const std::function<double(double)>& f, double lo, double hi, int points) {
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < points; ++i) best = std::min(best, f(lo + (hi - lo) * i / (points - 1)));
  return best;
}

/// Row residual min_c (w - a·c)^2 summed, for a given scale.
inline double row_residual(const std::vector<double>& w, const std::vector<double>& centers, double a) {
  double r = 0.0;
  for (double v : w) {
    double best = std::numeric_limits<double>::infinity();
    for (double c : centers) best = std::min(best, (v - a * c) * (v - a * c));
    r += best;
  }
  return r;
}

}  // namespace oracle
