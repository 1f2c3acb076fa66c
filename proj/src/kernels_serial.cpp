#include <algorithm>
#include <cmath>

#include "bivlm/kernels.hpp"

namespace bivlm::kernels::serial {

Moments moments(std::span<const float> x) {
  Moments out;
  out.count = x.size();
  if (x.empty()) return out;
  double sum = 0.0;
  for (float v : x) sum += v;
  out.mean = sum / static_cast<double>(x.size());
  for (float v : x) out.m2 += (v - out.mean) * (v - out.mean);
  return out;
}

void label_groups(std::span<const float> x, std::span<const double> upper_bounds,
                  std::span<std::uint8_t> labels) {
  for (std::size_t e = 0; e < x.size(); ++e) {
    const double mag = std::abs(static_cast<double>(x[e]));
    std::uint8_t label = 0;
    for (std::size_t k = upper_bounds.size(); k-- > 0;)
      if (mag <= upper_bounds[k]) label = static_cast<std::uint8_t>(k + 1);
    labels[e] = label;
  }
}

GroupSums group_sums(std::span<const float> x, std::span<const std::uint8_t> labels, std::size_t groups) {
  GroupSums out{std::vector<std::size_t>(groups, 0), std::vector<double>(groups, 0.0),
                std::vector<double>(groups, 0.0)};
  for (std::size_t e = 0; e < x.size(); ++e) {
    const double v = x[e];
    out.count[labels[e]] += 1;
    out.abs_sum[labels[e]] += std::abs(v);
    out.sq_sum[labels[e]] += v * v;
  }
  return out;
}

std::vector<double> group_abs_residuals(std::span<const float> x, std::span<const std::uint8_t> labels,
                                        std::span<const double> scales) {
  std::vector<double> out(scales.size(), 0.0);
  for (std::size_t e = 0; e < x.size(); ++e) {
    const double d = std::abs(static_cast<double>(x[e])) - scales[labels[e]];
    out[labels[e]] += d * d;
  }
  return out;
}

std::vector<std::size_t> row_group_offsets(std::span<const std::uint8_t> labels, std::size_t rows,
                                           std::size_t cols, std::size_t groups) {
  std::vector<std::size_t> offsets((rows + 1) * groups, 0);
  std::vector<std::size_t> running(groups, 0);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t g = 0; g < groups; ++g) offsets[i * groups + g] = running[g];
    for (std::size_t j = 0; j < cols; ++j) running[labels[i * cols + j]] += 1;
  }
  for (std::size_t g = 0; g < groups; ++g) offsets[rows * groups + g] = running[g];
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

  auto residual = [&] {
    double r = 0.0;
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t e = offsets[i]; e < offsets[i + 1]; ++e) {
        const double d = values[e] - out.scales[i] * out.relaxed[e];
        r += d * d;
      }
    return r;
  };
  out.residual_history.push_back(residual());

  for (int it = 0; it < iters; ++it) {
    const std::vector<double> previous = out.scales;
    for (std::size_t i = 0; i < rows; ++i) {
      double num = 0.0, den = 0.0;
      for (std::size_t e = offsets[i]; e < offsets[i + 1]; ++e) {
        num += values[e] * out.relaxed[e];
        den += out.relaxed[e] * out.relaxed[e];
      }
      out.scales[i] = den > 0.0 ? num / den : 0.0;
    }
    out.residual_history.push_back(residual());
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t e = offsets[i]; e < offsets[i + 1]; ++e)
        out.relaxed[e] = out.scales[i] != 0.0 ? std::clamp(values[e] / out.scales[i], -1.0, 1.0) : 0.0;
    out.residual_history.push_back(residual());
    out.iterations = it + 1;

    double max_delta = 0.0, max_scale = 0.0;
    for (std::size_t i = 0; i < rows; ++i) {
      max_delta = std::max(max_delta, std::abs(out.scales[i] - previous[i]));
      max_scale = std::max(max_scale, std::abs(out.scales[i]));
    }
    if (tol > 0.0 && max_delta <= tol * max_scale) break;
  }
  return out;
}

void fit_row_scales(std::span<const std::size_t> offsets, std::span<const double> values,
                    std::span<const double> centers, std::span<double> scales, std::span<std::uint8_t> codes) {
  const std::size_t rows = offsets.empty() ? 0 : offsets.size() - 1;
  for (std::size_t i = 0; i < rows; ++i) {
    if (offsets[i] == offsets[i + 1]) continue;
    scales[i] = best_row_scale(values.subspan(offsets[i], offsets[i + 1] - offsets[i]), centers);
    for (std::size_t e = offsets[i]; e < offsets[i + 1]; ++e)
      codes[e] = nearest_center(scales[i] != 0.0 ? values[e] / scales[i] : 0.0, centers);
  }
}

void reconstruct(const ScatterView& view, std::span<float> out) {
  std::vector<std::size_t> cursor(view.subset_scales.size(), 0);
  for (std::size_t e = 0; e < view.labels.size(); ++e) {
    const std::size_t g = view.labels[e];
    const std::size_t m = cursor[g]++;
    const double v = g == 0 ? view.row_scales[e / view.cols] * view.centers[view.codes[m]]
                            : view.subset_scales[g] * view.signs[g][m];
    out[e] = static_cast<float>(v);
  }
}

}  // namespace bivlm::kernels::serial
