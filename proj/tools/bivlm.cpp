// bivlm: command-line front end for the hybrid 1-bit weight quantizer.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "bivlm/artifact.hpp"
#include "bivlm/errors.hpp"
#include "bivlm/pipeline.hpp"
#include "bivlm/synthetic.hpp"
#include "bivlm/tensor_store.hpp"
#include "bivlm/token_pruner.hpp"

namespace fs = std::filesystem;
using namespace bivlm;

namespace {

constexpr int kExitFormat = 2;
constexpr int kExitNumeric = 3;

struct QuantFlags {
  int n_uns = 5;
  int n_bits = 2;
  std::optional<double> p_sal_max;
  double alpha = 1.4;
  int iters = 15;
  int scale_bits = 16;
  int l_i_max = 3;
  bool no_optimize = false;
  bool no_refine = false;
  bool unmasked = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("--n-uns", n_uns, "Unsalient partitions")->capture_default_str();
    cmd->add_option("--n-bits", n_bits, "Bits per salient weight")->capture_default_str();
    cmd->add_option("--p-sal-max", p_sal_max, "Salient fraction cap (default: 0.05 vision, 0.01 otherwise)");
    cmd->add_option("--alpha", alpha, "Level adaptation factor")->capture_default_str();
    cmd->add_option("--iters", iters, "Row-scale fit iterations")->capture_default_str();
    cmd->add_option("--scale-bits", scale_bits, "Scale storage width (16 or 32)")->capture_default_str();
    cmd->add_option("--l-i-max", l_i_max, "Index width bound used for the partition limit")->capture_default_str();
    cmd->add_flag("--no-optimize", no_optimize, "Use p_sal_max directly instead of searching");
    cmd->add_flag("--no-refine", no_refine, "Skip salient code refinement after the relaxed fit");
    cmd->add_flag("--unmasked-default", unmasked, "Index stream with an implicit most-frequent group");
  }

  QuantConfig config() const {
    QuantConfig c;
    c.n_uns = n_uns;
    c.n_bits = n_bits;
    c.p_sal_max = p_sal_max;
    c.alpha = alpha;
    c.iters = iters;
    c.scale_bits = scale_bits;
    c.l_i_max = l_i_max;
    c.optimize_saliency = !no_optimize;
    c.refine_codes = !no_refine;
    c.unmasked_default = unmasked;
    c.validate();
    return c;
  }
};

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

template <typename Fn>
void emit(const std::string& path, Fn&& fn) {
  if (path.empty() || path == "-") {
    fn(std::cout);
    return;
  }
  auto out = open_out(path);
  fn(out);
  if (!out) throw IoError("failed writing " + path);
}

std::vector<double> parse_thresholds(const std::string& text) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = text.find(',', start);
    const auto item = text.substr(start, end == std::string::npos ? std::string::npos : end - start);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      throw ValueError("bad threshold '" + item + "'");
    }
    if (used != item.size()) throw ValueError("bad threshold '" + item + "'");
    out.push_back(v);
    if (end == std::string::npos) break;
    start = end + 1;
  }
  return out;
}

void run_analyze(const std::string& manifest_path, const std::string& out_path) {
  const auto manifest = read_manifest(manifest_path);
  std::vector<LayerStats> stats;
  for (const auto& e : manifest.entries) stats.push_back(analyze_layer(load_layer(manifest, e)));
  emit(out_path, [&](std::ostream& os) { write_stats_csv(os, stats); });
}

void run_quantize(const std::string& manifest_path, const std::string& artifact, const std::string& csv,
                  const QuantFlags& flags) {
  const auto config = flags.config();
  const auto manifest = read_manifest(manifest_path);
  const auto result = quantize_model(manifest, config);
  write_artifact(result.quantized(), artifact);
  emit(csv, [&](std::ostream& os) { write_error_csv(os, result.layers); });
  std::cerr << "wrote " << artifact << ": " << result.layers.size() << " layers, " << std::fixed
            << std::setprecision(4) << result.total.realized_bpw << " bits/weight realized (L_model "
            << result.total.L_model << ")\n";
}

void run_report(const std::string& artifact, bool csv, int l_i_max) {
  const auto layers = read_artifact(artifact);
  std::vector<StorageReport> reports;
  for (const auto& l : layers) reports.push_back(storage_report(l, l_i_max));
  reports.push_back(aggregate_reports(reports));
  if (csv)
    write_storage_csv(std::cout, reports);
  else
    write_storage_table(std::cout, reports);
  std::cout << "note: L_i(f) is the fixed-schedule index formula; L_i(h) is the realized Huffman index cost"
               " per weight; the two differ by design.\n";
}

void run_sweep(const std::string& manifest_path, const std::string& thresholds, const std::string& out_path,
               const QuantFlags& flags) {
  const auto config = flags.config();
  const auto ts = parse_thresholds(thresholds);
  for (double t : ts)
    if (!(t > 0.0 && t < 1.0)) throw DomainError("thresholds must lie in (0, 1)");
  const auto manifest = read_manifest(manifest_path);
  emit(out_path, [&](std::ostream& os) {
    os << "layer,threshold,p_sal_opt,J_opt,J_fixed\n";
    for (const auto& e : manifest.entries) {
      const auto w = load_layer(manifest, e);
      const auto fit = fit_gaussian(w);
      for (const auto& pt : sweep(w, fit, config, ts))
        os << e.name << ',' << csv_number(pt.threshold) << ',' << csv_number(pt.p_sal_opt) << ','
           << csv_number(pt.J_opt) << ',' << csv_number(pt.J_fixed) << '\n';
    }
  });
}

void run_prune(const std::string& path, double ratio, std::uint32_t start_layer, const std::string& out_path) {
  const auto layers = read_attention(path);
  const auto decisions = prune(layers, ratio, start_layer);
  emit(out_path, [&](std::ostream& os) { os << decisions_to_json(decisions) << '\n'; });
}

void run_synth(const fs::path& dir, std::size_t rows, std::size_t cols, std::uint64_t seed) {
  fs::create_directories(dir);
  ModelManifest manifest;
  manifest.base_dir = dir;
  const Role roles[] = {Role::kVision, Role::kAdaptor, Role::kLanguage};
  const char* names[] = {"vision.block0.qkv", "adaptor.proj", "language.block0.mlp"};
  for (std::size_t l = 0; l < 3; ++l) {
    synth::Outliers o;
    o.fraction = 0.01;
    o.min_mult = 4.0;
    o.max_mult = 10.0;
    const auto w = synth::gaussian(names[l], roles[l], rows, cols, 0.02, seed + l, o);
    const auto file = std::string(names[l]) + ".bvw";
    write_tensor(w, dir / file);
    manifest.entries.push_back({names[l], file, roles[l], std::nullopt});
  }
  write_manifest(manifest, dir / "manifest.json");
  std::vector<AttentionTensor> att;
  for (std::uint32_t j = 0; j < 4; ++j) att.push_back(synth::language_attention(j, 6, 64, seed + 100 + j));
  write_attention(att, dir / "attention.bva");
  std::cerr << "wrote " << (dir / "manifest.json").string() << " and " << (dir / "attention.bva").string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hybrid 1-bit weight quantization and attention-based token pruning"};
  app.require_subcommand(1);

  std::string manifest, artifact, out, csv_out, thresholds = "0.01,0.02,0.05,0.10", attention;
  bool csv = false;
  double ratio = 0.5;
  std::uint32_t start_layer = 0;
  std::size_t rows = 128, cols = 128;
  std::uint64_t seed = 0;
  int report_l_i_max = 3;
  QuantFlags qflags, sflags;

  auto* analyze = app.add_subcommand("analyze", "Per-layer statistics CSV");
  analyze->add_option("manifest", manifest, "Model manifest (JSON)")->required();
  analyze->add_option("-o,--output", out, "CSV path (default stdout)");

  auto* quantize = app.add_subcommand("quantize", "Quantize every layer into a .bvq artifact");
  quantize->add_option("manifest", manifest, "Model manifest (JSON)")->required();
  quantize->add_option("-o,--output", artifact, "Artifact path")->required();
  quantize->add_option("--csv", csv_out, "Error CSV path (default stdout)");
  qflags.attach(quantize);

  auto* report = app.add_subcommand("report", "Storage report of a .bvq artifact");
  report->add_option("artifact", artifact, "Artifact path")->required();
  report->add_flag("--csv", csv, "CSV instead of an aligned table");
  report->add_option("--l-i-max", report_l_i_max, "Index width bound for the formula column")->capture_default_str();

  auto* sweep_cmd = app.add_subcommand("sweep", "Objective versus salient-fraction threshold CSV");
  sweep_cmd->add_option("manifest", manifest, "Model manifest (JSON)")->required();
  sweep_cmd->add_option("--thresholds", thresholds, "Comma-separated thresholds")->capture_default_str();
  sweep_cmd->add_option("-o,--output", out, "CSV path (default stdout)");
  sflags.attach(sweep_cmd);

  auto* prune_cmd = app.add_subcommand("prune-scores", "Retained image tokens per layer as JSON");
  prune_cmd->add_option("attention", attention, "Attention file (.bva)")->required();
  prune_cmd->add_option("--ratio", ratio, "Fraction of image tokens to drop, in [0, 1)")->capture_default_str();
  prune_cmd->add_option("--start-layer", start_layer, "First layer to prune")->capture_default_str();
  prune_cmd->add_option("-o,--output", out, "JSON path (default stdout)");

  auto* synth_cmd = app.add_subcommand("synth", "Write a small synthetic model and attention file");
  synth_cmd->add_option("dir", out, "Output directory")->required();
  synth_cmd->add_option("--rows", rows, "Rows per layer")->capture_default_str();
  synth_cmd->add_option("--cols", cols, "Columns per layer")->capture_default_str();
  synth_cmd->add_option("--seed", seed, "Random seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitFormat;
  }

  try {
    if (*analyze) run_analyze(manifest, out);
    if (*quantize) run_quantize(manifest, artifact, csv_out, qflags);
    if (*report) run_report(artifact, csv, report_l_i_max);
    if (*sweep_cmd) run_sweep(manifest, thresholds, out, sflags);
    if (*prune_cmd) run_prune(attention, ratio, start_layer, out);
    if (*synth_cmd) run_synth(out, rows, cols, seed);
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << '\n';
    return kExitFormat;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kExitFormat;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kExitFormat;
  }
  return 0;
}
