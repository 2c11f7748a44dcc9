#include <benchmark/benchmark.h>

#include "tabmath/evaluation.hpp"
#include "tabmath/features.hpp"
#include "tabmath/io.hpp"
#include "tabmath/models.hpp"
#include "tabmath/synthesis.hpp"

using namespace tabmath;

namespace {

struct TrainingData {
  DenseMatrix X;
  std::vector<double> y;
};

// Preprocessed RANDOM-split context of the flowers fixture at the given cap.
TrainingData context(std::size_t cap) {
  const auto spec = load_spec_file(std::string(TABMATH_FIXTURE_DIR) + "/flowers.json");
  const auto fm = engineer_features(synthesize_table(spec, 2048, 2025), spec);
  const auto capped = apply_row_cap(fm, cap, 2025);
  const auto split = split_random(capped, 2025);
  const auto pre = fit_preprocessor(capped, split);
  return {transform(pre, capped, split.context), targets(capped, split.context)};
}

void train_model(benchmark::State& state, const char* name) {
  const auto data = context(static_cast<std::size_t>(state.range(0)));
  auto spec = *model_spec(name);
  if (state.range(1) > 0) spec.n_trees = spec.n_estimators = static_cast<std::size_t>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(train(spec, data.X, data.y));
  state.counters["rows"] = static_cast<double>(data.X.rows);
  state.counters["cols"] = static_cast<double>(data.X.cols);
}

void BM_TrainOls(benchmark::State& s) { train_model(s, "ols"); }
void BM_TrainCart(benchmark::State& s) { train_model(s, "cart"); }
void BM_TrainRandomForest(benchmark::State& s) { train_model(s, "rf"); }
void BM_TrainGbt(benchmark::State& s) { train_model(s, "gbt-xgb"); }

BENCHMARK(BM_TrainOls)->Args({2048, 0})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_TrainCart)->Args({256, 0})->Args({2048, 0})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TrainRandomForest)->Args({2048, 50})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TrainGbt)->Args({2048, 50})->Unit(benchmark::kMillisecond);

void BM_PredictRandomForest(benchmark::State& state) {
  const auto data = context(2048);
  auto spec = *model_spec("rf");
  spec.n_trees = 100;
  const auto model = train(spec, data.X, data.y);
  for (auto _ : state) benchmark::DoNotOptimize(model->predict(data.X));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(data.X.rows));
}
BENCHMARK(BM_PredictRandomForest)->Unit(benchmark::kMillisecond);

}  // namespace
