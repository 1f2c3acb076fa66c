#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bivlm/binarizer.hpp"
#include "bivlm/partitioner.hpp"
#include "bivlm/salient_quantizer.hpp"
#include "bivlm/weight_matrix.hpp"
#include "bivlm/weight_stats.hpp"

namespace bivlm {

/// Largest group count the index codebook accepts (salient + N_uns).
inline constexpr int kMaxGroups = 64;

/// 0.05 for vision layers, 0.01 for language and adaptor layers.
double default_p_sal_max(Role role);

struct QuantConfig {
  int n_uns = 5;
  int n_bits = 2;
  std::optional<double> p_sal_max;  // role default when unset
  double alpha = 1.4;
  int iters = 15;
  /// Relative early-stop tolerance of the row-scale fit; 0 runs all iters.
  double fit_tol = 1e-8;
  /// Storage width of every scale and center: 16 (binary16) or 32.
  int scale_bits = 16;
  bool optimize_saliency = true;
  /// Exact per-row rescale over the level grid after the relaxed fit. Off
  /// reproduces the plain relax-then-assign procedure.
  bool refine_codes = true;
  /// Index stream marks only non-default groups; allows one extra partition.
  bool unmasked_default = false;
  int l_i_max = 3;

  /// Throws DomainError when a field is out of range or N_uns exceeds what
  /// an L_i_max-bit index can address.
  void validate() const;
  double p_sal_max_for(Role role) const;
  SalientOptions salient_options() const;
};

/// One hybrid-quantized layer: a salient part (row scale × center[code]) and
/// N_uns binarized subsets (scale × sign), on disjoint supports that cover
/// the matrix. All scales and centers are already rounded to scale_bits.
struct QuantizedLayer {
  std::string name;
  Role role = Role::kLanguage;
  std::size_t rows = 0;
  std::size_t cols = 0;
  int n_uns = 5;
  int n_bits = 2;
  int scale_bits = 16;
  bool unmasked_default = false;
  double p_sal_used = 0.0;
  double p_sal_max = 0.0;
  std::vector<std::uint8_t> labels;
  SalientQuant salient;
  std::vector<BinarizedSubset> subsets;

  std::size_t size() const { return rows * cols; }
  std::size_t groups() const { return static_cast<std::size_t>(n_uns) + 1; }
  std::vector<std::size_t> group_counts() const;
  /// Throws FormatError if the parts are mutually inconsistent.
  void check() const;
};

struct HybridResiduals {
  double salient = 0.0;
  std::vector<double> unsalient;  // index k-1

  double total() const;
};

/// Partition at p_sal, quantize the salient part, binarize every subset and
/// round scales to storage width. Throws DomainError if a rounded scale is
/// not finite.
QuantizedLayer hybrid_quantize(const WeightMatrix& matrix, const GaussianFit& fit, double p_sal,
                               const QuantConfig& config, double p_sal_max);

/// Residuals hybrid_quantize would produce, without materialising signs.
HybridResiduals hybrid_residuals(const WeightMatrix& matrix, const GaussianFit& fit, double p_sal,
                                 const QuantConfig& config);

/// Residuals of an existing layer against the matrix it came from.
HybridResiduals layer_residuals(const WeightMatrix& matrix, const QuantizedLayer& layer);

/// Dense W_q. Each element is written by exactly one component.
WeightMatrix reconstruct(const QuantizedLayer& layer);

}  // namespace bivlm
