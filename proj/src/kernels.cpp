#include "bivlm/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace bivlm::kernels {

namespace {

std::size_t block_count(std::size_t n) { return (n + kBlock - 1) / kBlock; }

// OpenMP loop indices must be signed for older runtimes.
using Index = std::ptrdiff_t;

}  // namespace

std::uint8_t nearest_center(double value, std::span<const double> centers) {
  std::uint8_t best = 0;
  double best_dist = std::abs(value - centers[0]);
  for (std::size_t c = 1; c < centers.size(); ++c) {
    const double d = std::abs(value - centers[c]);
    if (d < best_dist) {
      best_dist = d;
      best = static_cast<std::uint8_t>(c);
    }
  }
  return best;
}

Moments moments(std::span<const float> x) {
  Moments out;
  out.count = x.size();
  if (x.empty()) return out;

  const std::size_t nb = block_count(x.size());
  std::vector<double> partial(nb, 0.0);

#pragma omp parallel for schedule(static)
  for (Index b = 0; b < static_cast<Index>(nb); ++b) {
    const std::size_t lo = static_cast<std::size_t>(b) * kBlock;
    const std::size_t hi = std::min(lo + kBlock, x.size());
    double s = 0.0;
    for (std::size_t e = lo; e < hi; ++e) s += x[e];
    partial[b] = s;
  }
  double sum = 0.0;
  for (double p : partial) sum += p;
  out.mean = sum / static_cast<double>(x.size());

  const double mean = out.mean;
#pragma omp parallel for schedule(static)
  for (Index b = 0; b < static_cast<Index>(nb); ++b) {
    const std::size_t lo = static_cast<std::size_t>(b) * kBlock;
    const std::size_t hi = std::min(lo + kBlock, x.size());
    double s = 0.0;
    for (std::size_t e = lo; e < hi; ++e) {
      const double d = x[e] - mean;
      s += d * d;
    }
    partial[b] = s;
  }
  for (double p : partial) out.m2 += p;
  return out;
}

void label_groups(std::span<const float> x, std::span<const double> upper_bounds,
                  std::span<std::uint8_t> labels) {
  const std::size_t n_bounds = upper_bounds.size();
#pragma omp parallel for schedule(static)
  for (Index e = 0; e < static_cast<Index>(x.size()); ++e) {
    // Bounds increase, so the first bound that holds is n - (how many hold) + 1.
    const double mag = std::abs(static_cast<double>(x[e]));
    std::size_t hold = 0;
    for (std::size_t k = 0; k < n_bounds; ++k) hold += mag <= upper_bounds[k];
    labels[e] = static_cast<std::uint8_t>(hold == 0 ? 0 : n_bounds - hold + 1);
  }
}

GroupSums group_sums(std::span<const float> x, std::span<const std::uint8_t> labels, std::size_t groups) {
  const std::size_t nb = block_count(x.size());
  std::vector<std::size_t> counts(nb * groups, 0);
  std::vector<double> abs_sums(nb * groups, 0.0);
  std::vector<double> sq_sums(nb * groups, 0.0);

#pragma omp parallel for schedule(static)
  for (Index b = 0; b < static_cast<Index>(nb); ++b) {
    const std::size_t lo = static_cast<std::size_t>(b) * kBlock;
    const std::size_t hi = std::min(lo + kBlock, x.size());
    const std::size_t base = static_cast<std::size_t>(b) * groups;
    for (std::size_t e = lo; e < hi; ++e) {
      const std::size_t g = base + labels[e];
      const double v = x[e];
      counts[g] += 1;
      abs_sums[g] += std::abs(v);
      sq_sums[g] += v * v;
    }
  }

  GroupSums out{std::vector<std::size_t>(groups, 0), std::vector<double>(groups, 0.0),
                std::vector<double>(groups, 0.0)};
  for (std::size_t b = 0; b < nb; ++b) {
    for (std::size_t g = 0; g < groups; ++g) {
      out.count[g] += counts[b * groups + g];
      out.abs_sum[g] += abs_sums[b * groups + g];
      out.sq_sum[g] += sq_sums[b * groups + g];
    }
  }
  return out;
}

std::vector<double> group_abs_residuals(std::span<const float> x, std::span<const std::uint8_t> labels,
                                        std::span<const double> scales) {
  const std::size_t groups = scales.size();
  const std::size_t nb = block_count(x.size());
  std::vector<double> partial(nb * groups, 0.0);

#pragma omp parallel for schedule(static)
  for (Index b = 0; b < static_cast<Index>(nb); ++b) {
    const std::size_t lo = static_cast<std::size_t>(b) * kBlock;
    const std::size_t hi = std::min(lo + kBlock, x.size());
    const std::size_t base = static_cast<std::size_t>(b) * groups;
    for (std::size_t e = lo; e < hi; ++e) {
      const std::size_t g = labels[e];
      const double d = std::abs(static_cast<double>(x[e])) - scales[g];
      partial[base + g] += d * d;
    }
  }

  std::vector<double> out(groups, 0.0);
  for (std::size_t b = 0; b < nb; ++b)
    for (std::size_t g = 0; g < groups; ++g) out[g] += partial[b * groups + g];
  return out;
}

std::vector<std::size_t> row_group_offsets(std::span<const std::uint8_t> labels, std::size_t rows,
                                           std::size_t cols, std::size_t groups) {
  std::vector<std::size_t> offsets((rows + 1) * groups, 0);

#pragma omp parallel for schedule(static)
  for (Index i = 0; i < static_cast<Index>(rows); ++i) {
    std::size_t* row_counts = offsets.data() + (static_cast<std::size_t>(i) + 1) * groups;
    const std::uint8_t* row = labels.data() + static_cast<std::size_t>(i) * cols;
    for (std::size_t j = 0; j < cols; ++j) row_counts[row[j]] += 1;
  }
  // Exclusive scan over rows turns per-row counts into starting offsets.
  for (std::size_t i = 1; i <= rows; ++i)
    for (std::size_t g = 0; g < groups; ++g) offsets[i * groups + g] += offsets[(i - 1) * groups + g];
  return offsets;
}

RelaxResult relax_rows(std::span<const std::size_t> offsets, std::span<const double> values, int iters,
                       double tol) {
  const std::size_t rows = offsets.empty() ? 0 : offsets.size() - 1;
  RelaxResult out;
  out.scales.assign(rows, 0.0);
  out.relaxed.resize(values.size());
  for (std::size_t e = 0; e < values.size(); ++e)
    out.relaxed[e] = values[e] > 0.0 ? 1.0 : (values[e] < 0.0 ? -1.0 : 0.0);

  double initial = 0.0;
  for (double v : values) initial += v * v;
  out.residual_history.push_back(initial);

  std::vector<double> after_scale(rows), after_clip(rows), delta(rows);
  for (int it = 0; it < iters; ++it) {
#pragma omp parallel for schedule(static)
    for (Index ii = 0; ii < static_cast<Index>(rows); ++ii) {
      const std::size_t i = static_cast<std::size_t>(ii);
      const std::size_t lo = offsets[i], hi = offsets[i + 1];
      double num = 0.0, den = 0.0;
      for (std::size_t e = lo; e < hi; ++e) {
        num += values[e] * out.relaxed[e];
        den += out.relaxed[e] * out.relaxed[e];
      }
      const double a_old = out.scales[i];
      const double a = den > 0.0 ? num / den : 0.0;
      out.scales[i] = a;
      delta[i] = std::abs(a - a_old);

      double r1 = 0.0, r2 = 0.0;
      for (std::size_t e = lo; e < hi; ++e) {
        const double d = values[e] - a * out.relaxed[e];
        r1 += d * d;
      }
      for (std::size_t e = lo; e < hi; ++e) {
        out.relaxed[e] = a != 0.0 ? std::clamp(values[e] / a, -1.0, 1.0) : 0.0;
        const double d = values[e] - a * out.relaxed[e];
        r2 += d * d;
      }
      after_scale[i] = r1;
      after_clip[i] = r2;
    }

    double r1 = 0.0, r2 = 0.0, max_delta = 0.0, max_scale = 0.0;
    for (std::size_t i = 0; i < rows; ++i) {
      r1 += after_scale[i];
      r2 += after_clip[i];
      max_delta = std::max(max_delta, delta[i]);
      max_scale = std::max(max_scale, std::abs(out.scales[i]));
    }
    out.residual_history.push_back(r1);
    out.residual_history.push_back(r2);
    out.iterations = it + 1;
    if (tol > 0.0 && max_delta <= tol * max_scale) break;
  }
  return out;
}

namespace {

struct ScaleFit {
  double a = 0.0;
  double f = 0.0;  // residual minus sum w^2
};

ScaleFit best_positive_scale(std::span<const double> values, std::vector<double> s) {
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
  const std::size_t k = s.size();

  struct Event {
    double a;
    std::size_t member;
    std::size_t to;
  };
  std::vector<Event> events;
  std::vector<std::size_t> idx(values.size());
  double s_wc = 0.0;
  double s_cc = 0.0;
  for (std::size_t e = 0; e < values.size(); ++e) {
    const double w = values[e];
    std::size_t at = 0;
    if (w > 0.0) {
      at = k - 1;
      for (std::size_t b = k - 1; b-- > 0;) {
        const double beta = 0.5 * (s[b] + s[b + 1]);
        if (beta > 0.0) events.push_back({w / beta, e, b});
      }
    } else if (w < 0.0) {
      for (std::size_t b = 0; b + 1 < k; ++b) {
        const double beta = 0.5 * (s[b] + s[b + 1]);
        if (beta < 0.0) events.push_back({w / beta, e, b + 1});
      }
    } else {
      while (at + 1 < k && 0.5 * (s[at] + s[at + 1]) < 0.0) ++at;
    }
    idx[e] = at;
    s_wc += w * s[at];
    s_cc += s[at] * s[at];
  }
  std::sort(events.begin(), events.end(), [](const Event& x, const Event& y) { return x.a < y.a; });

  // residual(a) - sum w^2 = a^2·s_cc - 2a·s_wc while the assignment is fixed
  double best_a = 0.0;
  double best_f = 0.0;
  auto consider = [&](double lo, double hi) {
    double a = s_cc > 0.0 ? s_wc / s_cc : (s_wc > 0.0 ? hi : lo);
    a = std::clamp(a, lo, hi);
    const double f = a * (a * s_cc - 2.0 * s_wc);
    if (f < best_f) {
      best_f = f;
      best_a = a;
    }
  };
  double prev = 0.0;
  for (const auto& ev : events) {
    consider(prev, ev.a);
    const double w = values[ev.member];
    const double from = s[idx[ev.member]];
    const double to = s[ev.to];
    s_wc += w * (to - from);
    s_cc += to * to - from * from;
    idx[ev.member] = ev.to;
    prev = ev.a;
  }
  if (s_cc > 0.0 && s_wc / s_cc > prev)
    consider(prev, s_wc / s_cc);
  else
    consider(prev, prev);
  return {best_a, best_f};
}

}  // namespace

double best_row_scale(std::span<const double> values, std::span<const double> centers) {
  std::vector<double> s(centers.begin(), centers.end());
  const auto pos = best_positive_scale(values, s);
  for (auto& c : s) c = -c;
  const auto neg = best_positive_scale(values, s);
  return neg.f < pos.f ? -neg.a : pos.a;
}

void fit_row_scales(std::span<const std::size_t> offsets, std::span<const double> values,
                    std::span<const double> centers, std::span<double> scales, std::span<std::uint8_t> codes) {
  const std::size_t rows = offsets.empty() ? 0 : offsets.size() - 1;

#pragma omp parallel for schedule(dynamic, 16)
  for (Index ii = 0; ii < static_cast<Index>(rows); ++ii) {
    const std::size_t i = static_cast<std::size_t>(ii);
    const std::size_t lo = offsets[i], hi = offsets[i + 1];
    if (lo == hi) continue;
    const double a = best_row_scale(values.subspan(lo, hi - lo), centers);
    scales[i] = a;
    for (std::size_t e = lo; e < hi; ++e) codes[e] = nearest_center(a != 0.0 ? values[e] / a : 0.0, centers);
  }
}

void reconstruct(const ScatterView& view, std::span<float> out) {
  const std::size_t groups = view.subset_scales.size();
  const auto offsets = row_group_offsets(view.labels, view.rows, view.cols, groups);

#pragma omp parallel for schedule(static)
  for (Index ii = 0; ii < static_cast<Index>(view.rows); ++ii) {
    const std::size_t i = static_cast<std::size_t>(ii);
    std::vector<std::size_t> cursor(offsets.begin() + static_cast<std::ptrdiff_t>(i * groups),
                                    offsets.begin() + static_cast<std::ptrdiff_t>((i + 1) * groups));
    for (std::size_t j = 0; j < view.cols; ++j) {
      const std::size_t e = i * view.cols + j;
      const std::size_t g = view.labels[e];
      const std::size_t m = cursor[g]++;
      const double v = g == 0 ? view.row_scales[i] * view.centers[view.codes[m]]
                              : view.subset_scales[g] * view.signs[g][m];
      out[e] = static_cast<float>(v);
    }
  }
}

}  // namespace bivlm::kernels
