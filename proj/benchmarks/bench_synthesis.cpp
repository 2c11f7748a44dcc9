#include <benchmark/benchmark.h>

#include "tabmath/features.hpp"
#include "tabmath/io.hpp"
#include "tabmath/synthesis.hpp"

using namespace tabmath;

namespace {

OperatorSpec fixture(const char* id) {
  return load_spec_file(std::string(TABMATH_FIXTURE_DIR) + "/" + id + ".json");
}

// Rows per second for a full verified table, single- and multi-threaded.
void BM_SynthesizeFlowers(benchmark::State& state) {
  const auto spec = fixture("flowers");
  SynthesisOptions opts;
  opts.threads = static_cast<unsigned>(state.range(1));
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(synthesize_table(spec, n, 2025, opts));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SynthesizeFlowers)->Args({2048, 1})->Args({2048, 4})->UseRealTime()->Unit(benchmark::kMillisecond);

void BM_SynthesizeApples(benchmark::State& state) {
  const auto spec = fixture("apples");
  for (auto _ : state) benchmark::DoNotOptimize(synthesize_table(spec, 2048, 2025));
  state.SetItemsProcessed(state.iterations() * 2048);
}
BENCHMARK(BM_SynthesizeApples)->Unit(benchmark::kMillisecond);

void BM_TableCsv(benchmark::State& state) {
  const auto spec = fixture("bakery");
  const Table t = synthesize_table(spec, 2048, 2025);
  for (auto _ : state) {
    const std::string csv = table_to_csv(t);
    benchmark::DoNotOptimize(sha256_hex(csv));
  }
}
BENCHMARK(BM_TableCsv)->Unit(benchmark::kMicrosecond);

void BM_EngineerFeatures(benchmark::State& state) {
  const auto spec = fixture("bakery");
  const Table t = synthesize_table(spec, 2048, 2025);
  for (auto _ : state) benchmark::DoNotOptimize(engineer_features(t, spec));
}
BENCHMARK(BM_EngineerFeatures)->Unit(benchmark::kMicrosecond);

}  // namespace
