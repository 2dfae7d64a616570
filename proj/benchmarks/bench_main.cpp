#include <benchmark/benchmark.h>

#include <vector>

#include "sketchprec/decoder.hpp"
#include "sketchprec/fwht.hpp"
#include "sketchprec/glasso.hpp"
#include "sketchprec/modelgen.hpp"
#include "sketchprec/sketch.hpp"

using namespace sketchprec;

namespace {

std::vector<double> gaussian_vector(std::size_t n, std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<double> v(n);
  for (double& x : v) x = rng.gaussian();
  return v;
}

GroundTruth model(std::size_t d) {
  GeneratorSpec spec;
  spec.d = d;
  spec.num_blocks = d / 8;
  spec.seed = 1;
  return generate(spec);
}

void BM_Fwht(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  auto x = gaussian_vector(n, 1);
  for (auto _ : state) {
    fwht_inplace(x);
    benchmark::DoNotOptimize(x.data());
    benchmark::ClobberMemory();
  }
  state.SetComplexityN(state.range(0));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Fwht)->RangeMultiplier(4)->Range(64, 1 << 16)->Complexity(benchmark::oNLogN);

void BM_Features(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const auto kind = state.range(1) ? OperatorKind::Structured : OperatorKind::Dense;
  const auto op = SketchOperator::build(kind, d, d * d / 2, 7);
  const auto x = gaussian_vector(d, 2);
  for (auto _ : state) benchmark::DoNotOptimize(op.features(x));
  state.SetLabel(kind == OperatorKind::Structured ? "structured" : "dense");
}
BENCHMARK(BM_Features)->ArgsProduct({{32, 64, 128}, {0, 1}})->Unit(benchmark::kMicrosecond);

void BM_ApplyAdjoint(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const auto kind = state.range(1) ? OperatorKind::Structured : OperatorKind::Dense;
  const auto op = SketchOperator::build(kind, d, d * d / 2, 7);
  const auto sigma = model(d).sigma;
  for (auto _ : state) {
    const auto y = op.apply(sigma);
    benchmark::DoNotOptimize(op.adjoint(y));
  }
  state.SetLabel(kind == OperatorKind::Structured ? "structured" : "dense");
}
BENCHMARK(BM_ApplyAdjoint)->ArgsProduct({{32, 64, 128}, {0, 1}})->Unit(benchmark::kMillisecond);

void BM_Glasso(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const auto sigma = model(d).sigma;
  for (auto _ : state) benchmark::DoNotOptimize(glasso(sigma, {0.01}));
}
BENCHMARK(BM_Glasso)->Arg(32)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

// Ten decoder iterations from the scaled identity, asymptotic sketch.
void BM_DecodeIterations(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const auto gt = model(d);
  const auto op = SketchOperator::build(OperatorKind::Structured, d, d * d / 2, 3);
  const auto s = sketch_covariance(op, gt.sigma);
  DecoderConfig cfg;
  cfg.lambda = 0.05;
  cfg.gamma = LipschitzStep{};
  cfg.t_max = 10;
  for (auto _ : state) benchmark::DoNotOptimize(decode(op, s, cfg));
}
BENCHMARK(BM_DecodeIterations)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_SketchStream(benchmark::State& state) {
  const std::size_t d = 64;
  const auto gt = model(d);
  const auto op = SketchOperator::build(OperatorKind::Structured, d, 1536, 3);
  const auto data = sample_gaussian(gt, 1000, 2);
  for (auto _ : state) benchmark::DoNotOptimize(sketch_stream(op, data));
  state.SetItemsProcessed(state.iterations() * 1000);
}
BENCHMARK(BM_SketchStream)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
