#include <benchmark/benchmark.h>

#include "advaug/rng.hpp"
#include "advaug/tensor.hpp"

using namespace advaug;

namespace {

// Square products at sizes around the hidden widths.
void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  const Tensor a = draw(rng, n, n, Uniform{-1, 1});
  const Tensor b = draw(rng, n, n, Uniform{-1, 1});
  for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(64)->Arg(128)->Arg(256)->Arg(512);

// The first layer of a training batch: 100x784 by 784x512, forward and both
// backward products.
void BM_FirstLayer(benchmark::State& state) {
  Rng rng(2);
  const Tensor x = draw(rng, 100, 784, Uniform{0, 1});
  const Tensor w = draw(rng, 784, 512, Uniform{-0.1, 0.1});
  const Tensor g = draw(rng, 100, 512, Uniform{-1, 1});
  for (auto _ : state) {
    benchmark::DoNotOptimize(matmul(x, w));
    benchmark::DoNotOptimize(matmul_at_b(x, g));
    benchmark::DoNotOptimize(matmul_a_bt(g, w));
  }
}
BENCHMARK(BM_FirstLayer)->Unit(benchmark::kMillisecond);

}  // namespace
