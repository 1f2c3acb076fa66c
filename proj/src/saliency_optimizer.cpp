#include "bivlm/saliency_optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "bivlm/errors.hpp"

namespace bivlm {

namespace {

constexpr double kGolden = 0.3819660112501051;  // (3 - sqrt 5) / 2
constexpr double kMemoStep = 1e-6;

double checked(const std::function<double(double)>& f, double x) {
  const double y = f(x);
  if (!std::isfinite(y)) throw OptimizationError("objective is not finite at x = " + std::to_string(x));
  return y;
}

}  // namespace

ObjectiveEval evaluate_objective(const WeightMatrix& matrix, const GaussianFit& fit, double p_sal,
                                 const QuantConfig& config) {
  const double norm_sq = frobenius_sq(matrix);
  if (norm_sq == 0.0) throw DomainError("objective undefined for an all-zero matrix");
  const auto r = hybrid_residuals(matrix, fit, p_sal, config);

  ObjectiveEval out;
  out.p_sal = p_sal;
  out.norm_sq = norm_sq;
  out.salient_residual = r.salient;
  out.unsalient_residuals = r.unsalient;
  out.J = r.total() / norm_sq;
  return out;
}

int golden_iteration_bound(double lo, double hi, double tol) {
  return static_cast<int>(std::ceil(std::log((hi - lo) / tol) / std::log(1.0 / kGolden))) + 2;
}

BrentResult brent_minimize(const std::function<double(double)>& f, double lo, double hi, double tol, int max_iters) {
  if (!(lo < hi)) throw DomainError("brent_minimize needs lo < hi");
  if (!(tol > 0.0)) throw DomainError("brent_minimize needs tol > 0");
  const double eps = std::numeric_limits<double>::epsilon();

  double a = lo;
  double b = hi;
  double x = a + kGolden * (b - a);
  double w = x;
  double v = x;
  double fx = checked(f, x);
  double fw = fx;
  double fv = fx;
  double d = 0.0;
  double e = 0.0;

  BrentResult res;
  res.evaluations = 1;
  for (int it = 0; it < max_iters; ++it) {
    const double xm = 0.5 * (a + b);
    const double tol1 = 2.0 * eps * std::abs(x) + 0.25 * tol;
    const double tol2 = 2.0 * tol1;
    if (std::abs(x - xm) <= tol2 - 0.5 * (b - a)) {
      res.converged = true;
      break;
    }

    bool golden = true;
    if (std::abs(e) > tol1) {
      double r = (x - w) * (fx - fv);
      double q = (x - v) * (fx - fw);
      double p = (x - v) * q - (x - w) * r;
      q = 2.0 * (q - r);
      if (q > 0.0) p = -p;
      q = std::abs(q);
      const double e_prev = e;
      if (std::abs(p) < std::abs(0.5 * q * e_prev) && p > q * (a - x) && p < q * (b - x)) {
        e = d;
        d = p / q;
        const double u = x + d;
        if (u - a < tol2 || b - u < tol2) d = xm >= x ? tol1 : -tol1;
        golden = false;
      }
    }
    if (golden) {
      e = x >= xm ? a - x : b - x;
      d = kGolden * e;
    }

    double u = std::abs(d) >= tol1 ? x + d : x + (d > 0.0 ? tol1 : -tol1);
    u = std::clamp(u, lo, hi);
    const double fu = checked(f, u);
    ++res.evaluations;
    ++res.iterations;

    if (fu <= fx) {
      if (u >= x)
        a = x;
      else
        b = x;
      v = w;
      fv = fw;
      w = x;
      fw = fx;
      x = u;
      fx = fu;
    } else {
      if (u < x)
        a = u;
      else
        b = u;
      if (fu <= fw || w == x) {
        v = w;
        fv = fw;
        w = u;
        fw = fu;
      } else if (fu <= fv || v == x || v == w) {
        v = u;
        fv = fu;
      }
    }
  }
  res.x = x;
  res.fx = fx;
  return res;
}

SaliencyResult optimize_saliency(const WeightMatrix& matrix, const GaussianFit& fit, const QuantConfig& config,
                                 double p_sal_max) {
  if (!(p_sal_max > 0.0 && p_sal_max < 1.0))
    throw DomainError("p_sal_max must lie in (0, 1), got " + std::to_string(p_sal_max));

  std::map<long long, double> memo;
  auto J = [&](double p) {
    const long long key = std::llround(p / kMemoStep);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    const double snapped = std::clamp(static_cast<double>(key) * kMemoStep, 0.0, p_sal_max);
    const double value = evaluate_objective(matrix, fit, snapped, config).J;
    memo.emplace(key, value);
    return value;
  };
  auto snap = [&](double p) { return std::clamp(std::round(p / kMemoStep) * kMemoStep, 0.0, p_sal_max); };

  SaliencyResult out;
  out.p_sal_max = p_sal_max;
  out.J_at_zero = J(0.0);
  out.J_at_max = evaluate_objective(matrix, fit, p_sal_max, config).J;
  out.brent = brent_minimize(J, 0.0, p_sal_max, 1e-4 * p_sal_max, 50);

  out.p_sal = snap(out.brent.x);
  out.J = out.brent.fx;
  if (out.J_at_zero <= out.J) {
    out.p_sal = 0.0;
    out.J = out.J_at_zero;
  }
  if (out.J_at_max < out.J) {
    out.p_sal = p_sal_max;
    out.J = out.J_at_max;
  }
  out.evaluations = static_cast<int>(memo.size()) + 1;
  return out;
}

SweepPoint sweep_point(const WeightMatrix& matrix, const GaussianFit& fit, const QuantConfig& config,
                       double threshold) {
  SweepPoint pt;
  pt.threshold = threshold;
  const auto opt = optimize_saliency(matrix, fit, config, threshold);
  pt.p_sal_opt = opt.p_sal;
  pt.J_opt = opt.J;
  pt.J_fixed = opt.J_at_max;
  return pt;
}

std::vector<SweepPoint> sweep(const WeightMatrix& matrix, const GaussianFit& fit, const QuantConfig& config,
                              std::span<const double> thresholds) {
  std::vector<SweepPoint> out;
  out.reserve(thresholds.size());
  for (double t : thresholds) out.push_back(sweep_point(matrix, fit, config, t));
  return out;
}

}  // namespace bivlm
