#include "bivlm/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <iomanip>

#include "bivlm/errors.hpp"

namespace bivlm {

namespace {

template <typename E>
[[noreturn]] void rethrow_named(const E& e, const std::string& layer) {
  throw E("layer '" + layer + "': " + e.what());
}

GaussianFit fit_or_point(const WeightMatrix& matrix) {
  if (matrix.size() >= 2) return fit_gaussian(matrix);
  GaussianFit f;
  f.mu = matrix.data()[0];
  f.count = 1;
  return f;
}


}  // namespace

std::string csv_number(double value) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, r.ptr);
}

LayerResult quantize_layer_detailed(const WeightMatrix& matrix, const QuantConfig& config,
                                    std::optional<double> p_sal_max) {
  config.validate();
  if (matrix.empty()) throw DomainError("cannot quantize an empty matrix");
  const double p_max = p_sal_max.value_or(config.p_sal_max_for(matrix.role()));
  if (!(p_max > 0.0 && p_max < 1.0)) throw DomainError("p_sal_max must lie in (0, 1)");

  LayerResult out;
  out.fit = fit_or_point(matrix);
  const double norm_sq = frobenius_sq(matrix);

  double p_sal = p_max;
  if (norm_sq == 0.0) {
    p_sal = 0.0;
  } else if (config.optimize_saliency) {
    out.search = optimize_saliency(matrix, out.fit, config, p_max);
    p_sal = out.search->p_sal;
  }

  out.layer = hybrid_quantize(matrix, out.fit, p_sal, config, p_max);
  if (norm_sq > 0.0) {
    out.J = layer_residuals(matrix, out.layer).total() / norm_sq;
    out.relative_error = std::sqrt(out.J);
  }
  out.storage = storage_report(out.layer, config.l_i_max);
  return out;
}

QuantizedLayer quantize_layer(const WeightMatrix& matrix, const QuantConfig& config) {
  return quantize_layer_detailed(matrix, config).layer;
}

double binarization_relative_error(const WeightMatrix& matrix) {
  const auto data = matrix.data();
  if (data.empty()) throw DomainError("empty matrix");
  double abs_sum = 0.0;
  for (float v : data) abs_sum += std::abs(static_cast<double>(v));
  const double a = abs_sum / static_cast<double>(data.size());
  double err = 0.0;
  double norm = 0.0;
  for (float v : data) {
    const double w = v;
    const double d = std::abs(w) - a;
    err += d * d;
    norm += w * w;
  }
  if (norm == 0.0) return 0.0;
  return std::sqrt(err / norm);
}

std::vector<QuantizedLayer> ModelResult::quantized() const {
  std::vector<QuantizedLayer> out;
  out.reserve(layers.size());
  for (const auto& l : layers) out.push_back(l.layer);
  return out;
}

ModelResult quantize_model(const ModelManifest& manifest, const QuantConfig& config) {
  config.validate();
  ModelResult result;
  std::vector<StorageReport> reports;
  for (const auto& entry : manifest.entries) {
    try {
      const auto matrix = load_layer(manifest, entry);
      const double p_max = config.p_sal_max.value_or(entry.p_sal_max.value_or(default_p_sal_max(entry.role)));
      result.layers.push_back(quantize_layer_detailed(matrix, config, p_max));
      reports.push_back(result.layers.back().storage);
    } catch (const TruncationError& e) {
      rethrow_named(e, entry.name);
    } catch (const FormatError& e) {
      rethrow_named(e, entry.name);
    } catch (const IoError& e) {
      rethrow_named(e, entry.name);
    } catch (const ValueError& e) {
      rethrow_named(e, entry.name);
    } catch (const DomainError& e) {
      rethrow_named(e, entry.name);
    } catch (const OptimizationError& e) {
      rethrow_named(e, entry.name);
    }
  }
  result.total = aggregate_reports(reports);
  return result;
}

void write_error_csv(std::ostream& out, std::span<const LayerResult> layers) {
  out << "layer,m,n,p_sal_used,J,relative_error,bits_per_weight\n";
  for (const auto& l : layers)
    out << l.layer.name << ',' << l.layer.rows << ',' << l.layer.cols << ',' << csv_number(l.layer.p_sal_used) << ','
        << csv_number(l.J) << ',' << csv_number(l.relative_error) << ',' << csv_number(l.storage.realized_bpw)
        << '\n';
}

void write_storage_csv(std::ostream& out, std::span<const StorageReport> reports) {
  out << "layer,m,n,N_uns,N_b,p_sal_max,p_sal_used,L_B,L_a,L_model,L_i_formula,L_i_realized,index_entropy,"
         "L_B_realized,realized_bits,realized_bpw,within_budget\n";
  for (const auto& r : reports)
    out << r.name << ',' << r.m << ',' << r.n << ',' << r.n_uns << ',' << r.n_bits << ',' << csv_number(r.p_sal_max)
        << ',' << csv_number(r.p_sal_used) << ',' << csv_number(r.L_B) << ',' << csv_number(r.L_a) << ','
        << csv_number(r.L_model) << ',' << csv_number(r.L_i_formula) << ',' << csv_number(r.L_i) << ','
        << csv_number(r.index_entropy) << ',' << csv_number(r.L_B_realized) << ',' << r.realized_total_bits << ','
        << csv_number(r.realized_bpw) << ',' << (r.within_budget ? "yes" : "no") << '\n';
}

void write_storage_table(std::ostream& out, std::span<const StorageReport> reports) {
  std::size_t name_w = 5;
  for (const auto& r : reports) name_w = std::max(name_w, r.name.size());
  const auto flags = out.flags();
  const auto precision = out.precision();
  out << std::left << std::setw(static_cast<int>(name_w)) << "layer" << std::right << std::setw(8) << "m"
      << std::setw(8) << "n" << std::setw(9) << "p_sal" << std::setw(8) << "L_B" << std::setw(9) << "L_a"
      << std::setw(9) << "L_model" << std::setw(9) << "L_i(f)" << std::setw(9) << "L_i(h)" << std::setw(9)
      << "H_idx" << std::setw(9) << "bpw" << "  budget\n";
  out << std::fixed;
  for (const auto& r : reports) {
    out << std::left << std::setw(static_cast<int>(name_w)) << r.name << std::right << std::setw(8) << r.m
        << std::setw(8) << r.n << std::setprecision(5) << std::setw(9) << r.p_sal_used << std::setprecision(4)
        << std::setw(8) << r.L_B << std::setw(9) << r.L_a << std::setw(9) << r.L_model << std::setw(9)
        << r.L_i_formula << std::setw(9) << r.L_i << std::setw(9) << r.index_entropy << std::setw(9)
        << r.realized_bpw << "  " << (r.within_budget ? "ok" : "EXCEEDED") << '\n';
  }
  out.flags(flags);
  out.precision(precision);
}

LayerStats analyze_layer(const WeightMatrix& matrix) {
  LayerStats s;
  s.name = matrix.name();
  s.role = matrix.role();
  s.m = matrix.rows();
  s.n = matrix.cols();
  s.fit = fit_or_point(matrix);
  const auto [lo, hi] = std::minmax_element(matrix.data().begin(), matrix.data().end());
  s.min = *lo;
  s.max = *hi;
  s.bins = default_bin_count(matrix.size());
  s.kl = kl_divergence(histogram(matrix, s.bins), s.fit);
  s.outliers_3sigma = outlier_fraction(matrix.data(), s.fit);
  return s;
}

void write_stats_csv(std::ostream& out, std::span<const LayerStats> stats) {
  out << "layer,role,m,n,mu,sigma,min,max,kl_nats,outlier_fraction_3sigma,bins\n";
  for (const auto& s : stats)
    out << s.name << ',' << role_name(s.role) << ',' << s.m << ',' << s.n << ',' << csv_number(s.fit.mu) << ','
        << csv_number(s.fit.sigma) << ',' << csv_number(s.min) << ',' << csv_number(s.max) << ',' << csv_number(s.kl)
        << ',' << csv_number(s.outliers_3sigma) << ',' << s.bins << '\n';
}

}  // namespace bivlm
