#include <benchmark/benchmark.h>

#include "tabmath/io.hpp"
#include "tabmath/lang/interpreter.hpp"
#include "tabmath/lang/parser.hpp"
#include "tabmath/operator_spec.hpp"

using namespace tabmath;

namespace {

OperatorSpec fixture(const char* id) {
  return load_spec_file(std::string(TABMATH_FIXTURE_DIR) + "/" + id + ".json");
}

void BM_ParseVerifier(benchmark::State& state) {
  const auto spec = fixture("flowers");
  const std::string src = spec.verifier.code;
  for (auto _ : state) benchmark::DoNotOptimize(lang::parse_program(src));
}
BENCHMARK(BM_ParseVerifier);

void BM_RunGenerator(benchmark::State& state) {
  const auto spec = fixture("flowers");
  auto rng = lang::RngState::derive(spec.id, "bench", 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(lang::eval_function(*spec.generator.program, "generator", {}, rng));
  }
}
BENCHMARK(BM_RunGenerator);

void BM_RunVerifier(benchmark::State& state) {
  const auto spec = fixture("flowers");
  for (auto _ : state) benchmark::DoNotOptimize(run_verifier(spec, spec.base_assignment));
}
BENCHMARK(BM_RunVerifier);

void BM_WhileLoop(benchmark::State& state) {
  const auto program = lang::parse_program(
      "fn verifier(n) {\n"
      "  s = 0;\n"
      "  i = 0;\n"
      "  while (i < n) { s = s + i % 7; i = i + 1; }\n"
      "  return s;\n"
      "}");
  const lang::Map args{{"n", lang::Value::integer(state.range(0))}};
  lang::RngState rng;
  for (auto _ : state) benchmark::DoNotOptimize(lang::eval_function(program, "verifier", args, rng));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_WhileLoop)->Arg(1000)->Arg(20000);

}  // namespace
