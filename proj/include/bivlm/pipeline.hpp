#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "bivlm/bit_packer.hpp"
#include "bivlm/hybrid.hpp"
#include "bivlm/saliency_optimizer.hpp"
#include "bivlm/tensor_store.hpp"
#include "bivlm/weight_matrix.hpp"

namespace bivlm {

/// A quantized layer together with how it was obtained and what it costs.
struct LayerResult {
  QuantizedLayer layer;
  GaussianFit fit;
  std::optional<SaliencyResult> search;  // absent when optimization is off or W = 0
  double J = 0.0;
  double relative_error = 0.0;  // ||W - W_q||_F / ||W||_F
  StorageReport storage;
};

/// Fit, choose p_sal (Brent search over [0, p_sal_max] or p_sal_max itself),
/// quantize. An all-zero matrix yields a layer with every scale zero.
LayerResult quantize_layer_detailed(const WeightMatrix& matrix, const QuantConfig& config,
                                    std::optional<double> p_sal_max = std::nullopt);
QuantizedLayer quantize_layer(const WeightMatrix& matrix, const QuantConfig& config);

/// Relative Frobenius error of sign(W)·mean|W| over the whole matrix.
double binarization_relative_error(const WeightMatrix& matrix);

struct ModelResult {
  std::vector<LayerResult> layers;
  StorageReport total;

  std::vector<QuantizedLayer> quantized() const;
};

/// Runs every manifest entry in order. p_sal_max precedence: config, then
/// the entry override, then the role default. A failing layer rethrows with
/// its name prepended, keeping the error type.
ModelResult quantize_model(const ModelManifest& manifest, const QuantConfig& config);

/// Shortest decimal form that reads back to the same double.
std::string csv_number(double value);

/// Columns: layer,m,n,p_sal_used,J,relative_error,bits_per_weight.
void write_error_csv(std::ostream& out, std::span<const LayerResult> layers);
void write_storage_csv(std::ostream& out, std::span<const StorageReport> reports);
void write_storage_table(std::ostream& out, std::span<const StorageReport> reports);

struct LayerStats {
  std::string name;
  Role role = Role::kLanguage;
  std::size_t m = 0;
  std::size_t n = 0;
  GaussianFit fit;
  double min = 0.0;
  double max = 0.0;
  double kl = 0.0;  // histogram vs fitted Gaussian, nats
  double outliers_3sigma = 0.0;
  std::size_t bins = 0;
};

LayerStats analyze_layer(const WeightMatrix& matrix);
void write_stats_csv(std::ostream& out, std::span<const LayerStats> stats);

}  // namespace bivlm
