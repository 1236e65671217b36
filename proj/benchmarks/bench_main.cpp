#include <benchmark/benchmark.h>

#include "isa/data.hpp"
#include "isa/dtw.hpp"
#include "isa/eval.hpp"
#include "isa/isa_net.hpp"
#include "isa/rng.hpp"
#include "isa/stop_feature.hpp"

namespace {

using namespace isa;

std::vector<Sequence> circle_batch(std::size_t n, std::size_t length) {
  CircleSpec spec;
  spec.samples_per_class = (n + 1) / 2;
  spec.length_lo = length;
  spec.length_hi = length;
  spec.seed = 1;
  std::vector<Sequence> out;
  for (const Sequence& s : gen_circles(spec).sequences) {
    out.push_back(augment(s, {StopMechanism::linear, 1.0}));
    if (out.size() == n) break;
  }
  return out;
}

void BM_Encode(benchmark::State& state) {
  const auto hidden = static_cast<std::size_t>(state.range(0));
  const auto length = static_cast<std::size_t>(state.range(1));
  Rng rng(0);
  const IsaParameters p = init_parameters(ModelDims::make(3, hidden), rng);
  const Sequence s = circle_batch(1, length)[0];
  for (auto _ : state) benchmark::DoNotOptimize(encode(p, s));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(length));
}
BENCHMARK(BM_Encode)->Args({32, 100})->Args({64, 100})->Args({128, 100})->Args({32, 200});

void BM_Backward(benchmark::State& state) {
  const auto hidden = static_cast<std::size_t>(state.range(0));
  const auto workers = static_cast<std::size_t>(state.range(1));
  Rng rng(0);
  const IsaParameters p = init_parameters(ModelDims::make(3, hidden), rng);
  const auto batch = circle_batch(16, 100);
  for (auto _ : state) benchmark::DoNotOptimize(backward(p, batch, 0.5, workers));
  state.SetItemsProcessed(state.iterations() * 16);
}
BENCHMARK(BM_Backward)->Args({32, 1})->Args({64, 1})->Args({32, 2})->Unit(benchmark::kMillisecond);

void BM_Dtw(benchmark::State& state) {
  const auto length = static_cast<std::size_t>(state.range(0));
  const auto seqs = circle_batch(2, length);
  DtwConfig cfg;
  if (state.range(1) > 0) cfg.band_radius = static_cast<std::size_t>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(dtw_distance(seqs[0], seqs[1], cfg));
}
BENCHMARK(BM_Dtw)->Args({50, 0})->Args({200, 0})->Args({200, 10});

void BM_Knn(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(0);
  RepresentationSet train;
  train.z = Matrix(n, 32);
  for (double& v : train.z.flat()) v = rng.normal();
  for (std::size_t i = 0; i < n; ++i) {
    train.labels.push_back(static_cast<int>(i % 2));
    train.ids.push_back(std::to_string(i));
  }
  Matrix queries(50, 32);
  for (double& v : queries.flat()) v = rng.normal();
  for (auto _ : state) benchmark::DoNotOptimize(knn_classify(train, queries, 1));
}
BENCHMARK(BM_Knn)->Arg(150)->Arg(1000);

}  // namespace

BENCHMARK_MAIN();
