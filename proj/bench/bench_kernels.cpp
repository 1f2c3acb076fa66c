// Serial reference versus OpenMP kernels on layer-sized inputs.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "bivlm/kernels.hpp"
#include "bivlm/pipeline.hpp"
#include "bivlm/synthetic.hpp"

using namespace bivlm;

namespace {

const std::vector<float>& weights() {
  static const auto data = [] {
    const auto w = synth::gaussian("b", Role::kLanguage, 2048, 2048, 0.02, 1, {0.01, 4.0, 10.0});
    return std::vector<float>(w.data().begin(), w.data().end());
  }();
  return data;
}

const std::vector<double> kBounds{0.005, 0.01, 0.015, 0.025, 0.06};

const std::vector<std::uint8_t>& labels() {
  static const auto l = [] {
    std::vector<std::uint8_t> out(weights().size());
    kernels::serial::label_groups(weights(), kBounds, out);
    return out;
  }();
  return l;
}

struct Rows {
  std::vector<std::size_t> offsets{0};
  std::vector<double> values;
};

const Rows& salient_rows() {
  static const auto r = [] {
    Rows rows;
    std::mt19937_64 rng(2);
    std::student_t_distribution<double> t(3.0);
    for (int i = 0; i < 2048; ++i) {
      for (int e = 0; e < 40; ++e) rows.values.push_back(0.02 * t(rng));
      rows.offsets.push_back(rows.values.size());
    }
    return rows;
  }();
  return r;
}

void BM_LabelSerial(benchmark::State& s) {
  std::vector<std::uint8_t> out(weights().size());
  for (auto _ : s) kernels::serial::label_groups(weights(), kBounds, out);
  s.SetItemsProcessed(s.iterations() * static_cast<std::int64_t>(out.size()));
}

void BM_LabelOmp(benchmark::State& s) {
  std::vector<std::uint8_t> out(weights().size());
  for (auto _ : s) kernels::label_groups(weights(), kBounds, out);
  s.SetItemsProcessed(s.iterations() * static_cast<std::int64_t>(out.size()));
}

void BM_GroupSumsSerial(benchmark::State& s) {
  for (auto _ : s) benchmark::DoNotOptimize(kernels::serial::group_sums(weights(), labels(), 6));
}

void BM_GroupSumsOmp(benchmark::State& s) {
  for (auto _ : s) benchmark::DoNotOptimize(kernels::group_sums(weights(), labels(), 6));
}

void BM_RelaxSerial(benchmark::State& s) {
  const auto& r = salient_rows();
  for (auto _ : s) benchmark::DoNotOptimize(kernels::serial::relax_rows(r.offsets, r.values, 15, 0.0));
}

void BM_RelaxOmp(benchmark::State& s) {
  const auto& r = salient_rows();
  for (auto _ : s) benchmark::DoNotOptimize(kernels::relax_rows(r.offsets, r.values, 15, 0.0));
}

const std::vector<double> kCenters{-2.0568, -0.6540, 0.6540, 2.0568};

void BM_FitScalesSerial(benchmark::State& s) {
  const auto& r = salient_rows();
  std::vector<double> scales(2048);
  std::vector<std::uint8_t> codes(r.values.size());
  for (auto _ : s) kernels::serial::fit_row_scales(r.offsets, r.values, kCenters, scales, codes);
}

void BM_FitScalesOmp(benchmark::State& s) {
  const auto& r = salient_rows();
  std::vector<double> scales(2048);
  std::vector<std::uint8_t> codes(r.values.size());
  for (auto _ : s) kernels::fit_row_scales(r.offsets, r.values, kCenters, scales, codes);
}

void BM_QuantizeLayer(benchmark::State& s) {
  const auto n = static_cast<std::size_t>(s.range(0));
  const auto w = synth::gaussian("q", Role::kLanguage, n, n, 0.02, 3, {0.01, 4.0, 10.0});
  for (auto _ : s) benchmark::DoNotOptimize(quantize_layer(w, QuantConfig{}));
}

}  // namespace

BENCHMARK(BM_LabelSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LabelOmp)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GroupSumsSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GroupSumsOmp)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RelaxSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RelaxOmp)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FitScalesSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FitScalesOmp)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_QuantizeLayer)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
