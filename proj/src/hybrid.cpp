#include "bivlm/hybrid.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "bivlm/bit_packer.hpp"
#include "bivlm/errors.hpp"
#include "bivlm/half.hpp"
#include "bivlm/kernels.hpp"

namespace bivlm {

namespace {

double round_scale(double value, int width, const std::string& what) {
  const double r = round_to_width(value, width);
  if (!std::isfinite(r))
    throw DomainError(what + " " + std::to_string(value) + " does not fit a " + std::to_string(width) +
                      "-bit float; use 32-bit scales");
  return r;
}

void round_salient(SalientQuant& q, int width) {
  for (double& a : q.scales) a = round_scale(a, width, "row scale");
  for (double& c : q.grid.centers) c = round_scale(c, width, "level center");
}

std::vector<double> rounded_group_scales(const kernels::GroupSums& sums, int width) {
  std::vector<double> scales(sums.count.size(), 0.0);
  for (std::size_t g = 1; g < scales.size(); ++g)
    if (sums.count[g] > 0)
      scales[g] = round_scale(sums.abs_sum[g] / static_cast<double>(sums.count[g]), width, "subset scale");
  return scales;
}

}  // namespace

double default_p_sal_max(Role role) { return role == Role::kVision ? 0.05 : 0.01; }

void QuantConfig::validate() const {
  const int limit = std::min(max_partitions(l_i_max) + (unmasked_default ? 1 : 0), kMaxGroups - 1);
  if (n_uns < 1 || n_uns > limit)
    throw DomainError("N_uns must lie in [1, " + std::to_string(limit) + "] for L_i,max = " +
                      std::to_string(l_i_max) + ", got " + std::to_string(n_uns));
  if (n_bits < 1 || n_bits > 8) throw DomainError("N_b must lie in [1, 8], got " + std::to_string(n_bits));
  if (p_sal_max && !(*p_sal_max > 0.0 && *p_sal_max < 1.0))
    throw DomainError("p_sal_max must lie in (0, 1), got " + std::to_string(*p_sal_max));
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw DomainError("alpha must be positive and finite");
  if (iters < 1) throw DomainError("iters must be >= 1");
  if (!(fit_tol >= 0.0)) throw DomainError("fit tolerance must be >= 0");
  if (scale_bits != 16 && scale_bits != 32) throw DomainError("scale width must be 16 or 32 bits");
}

double QuantConfig::p_sal_max_for(Role role) const { return p_sal_max.value_or(default_p_sal_max(role)); }

SalientOptions QuantConfig::salient_options() const {
  SalientOptions o;
  o.n_bits = n_bits;
  o.alpha = alpha;
  o.iters = iters;
  o.tol = fit_tol;
  o.refine = refine_codes;
  return o;
}

std::vector<std::size_t> QuantizedLayer::group_counts() const {
  std::vector<std::size_t> counts(groups(), 0);
  counts[kSalient] = salient.codes.size();
  for (const auto& s : subsets) counts[static_cast<std::size_t>(s.k)] = s.signs.size();
  return counts;
}

void QuantizedLayer::check() const {
  if (labels.size() != rows * cols) throw FormatError(name + ": label count does not match m*n");
  if (subsets.size() != static_cast<std::size_t>(n_uns)) throw FormatError(name + ": subset count != N_uns");
  if (salient.scales.size() != rows) throw FormatError(name + ": row scale count != m");
  if (salient.grid.centers.size() != (std::size_t{1} << n_bits)) throw FormatError(name + ": center count != 2^N_b");
  std::vector<std::size_t> tally(groups(), 0);
  for (auto g : labels) {
    if (g >= groups()) throw FormatError(name + ": label outside 0..N_uns");
    ++tally[g];
  }
  for (std::size_t k = 0; k < subsets.size(); ++k)
    if (subsets[k].k != static_cast<int>(k + 1)) throw FormatError(name + ": subsets out of order");
  if (tally != group_counts()) throw FormatError(name + ": group sizes disagree with labels");
  for (auto c : salient.codes)
    if (c >= salient.grid.centers.size()) throw FormatError(name + ": salient code out of range");
}

double HybridResiduals::total() const {
  return std::accumulate(unsalient.begin(), unsalient.end(), salient);
}

QuantizedLayer hybrid_quantize(const WeightMatrix& matrix, const GaussianFit& fit, double p_sal,
                               const QuantConfig& config, double p_sal_max) {
  config.validate();
  auto part = partition(matrix, fit, p_sal, config.n_uns);

  QuantizedLayer out;
  out.name = matrix.name();
  out.role = matrix.role();
  out.rows = matrix.rows();
  out.cols = matrix.cols();
  out.n_uns = config.n_uns;
  out.n_bits = config.n_bits;
  out.scale_bits = config.scale_bits;
  out.unmasked_default = config.unmasked_default;
  out.p_sal_used = part.spec.p_sal;
  out.p_sal_max = p_sal_max;

  out.salient = quantize_salient(matrix, part, config.salient_options());
  round_salient(out.salient, config.scale_bits);
  out.subsets = binarize_all(matrix, part);
  for (auto& s : out.subsets)
    if (!s.signs.empty()) s.scale = round_scale(s.scale, config.scale_bits, "subset scale");
  out.labels = std::move(part.labels);
  return out;
}

HybridResiduals hybrid_residuals(const WeightMatrix& matrix, const GaussianFit& fit, double p_sal,
                                 const QuantConfig& config) {
  config.validate();
  const auto part = partition(matrix, fit, p_sal, config.n_uns);
  const auto members = gather_salient(matrix, part);
  auto quant = quantize_salient(members, config.salient_options());
  round_salient(quant, config.scale_bits);

  const auto sums = kernels::group_sums(matrix.data(), part.labels, part.groups());
  const auto scales = rounded_group_scales(sums, config.scale_bits);
  const auto residuals = kernels::group_abs_residuals(matrix.data(), part.labels, scales);

  HybridResiduals out;
  out.salient = salient_error(members, quant);
  out.unsalient.assign(residuals.begin() + 1, residuals.end());
  return out;
}

HybridResiduals layer_residuals(const WeightMatrix& matrix, const QuantizedLayer& layer) {
  if (matrix.rows() != layer.rows || matrix.cols() != layer.cols)
    throw ValueError("matrix shape does not match layer " + layer.name);
  LayerPartition part;
  part.rows = layer.rows;
  part.cols = layer.cols;
  part.labels = layer.labels;
  part.counts = layer.group_counts();
  const auto members = gather_salient(matrix, part);

  std::vector<double> scales(layer.groups(), 0.0);
  for (const auto& s : layer.subsets) scales[static_cast<std::size_t>(s.k)] = s.scale;
  const auto residuals = kernels::group_abs_residuals(matrix.data(), layer.labels, scales);

  HybridResiduals out;
  out.salient = salient_error(members, layer.salient);
  out.unsalient.assign(residuals.begin() + 1, residuals.end());
  return out;
}

WeightMatrix reconstruct(const QuantizedLayer& layer) {
  layer.check();
  std::vector<double> subset_scales(layer.groups(), 0.0);
  std::vector<std::span<const std::int8_t>> signs(layer.groups());
  for (const auto& s : layer.subsets) {
    subset_scales[static_cast<std::size_t>(s.k)] = s.scale;
    signs[static_cast<std::size_t>(s.k)] = s.signs;
  }
  kernels::ScatterView view;
  view.labels = layer.labels;
  view.rows = layer.rows;
  view.cols = layer.cols;
  view.row_scales = layer.salient.scales;
  view.centers = layer.salient.grid.centers;
  view.codes = layer.salient.codes;
  view.subset_scales = subset_scales;
  view.signs = signs;

  std::vector<float> data(layer.size());
  kernels::reconstruct(view, data);
  return WeightMatrix(layer.name, layer.role, layer.rows, layer.cols, std::move(data));
}

}  // namespace bivlm
