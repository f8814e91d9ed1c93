#include <benchmark/benchmark.h>

#include "hodgeconv/complex.hpp"
#include "hodgeconv/laplacian.hpp"

namespace {

void BM_HodgeLaplacianGrid(benchmark::State& state) {
  const auto side = static_cast<hodge::Index>(state.range(0));
  const auto complex = hodge::make_grid(side, side);
  const int k = static_cast<int>(state.range(1));
  for (auto _ : state) {
    auto L = hodge::hodge_laplacian(complex, k);
    benchmark::DoNotOptimize(L);
  }
  state.SetLabel(k == 0 ? "L0" : "L1");
}
BENCHMARK(BM_HodgeLaplacianGrid)->ArgsProduct({{8, 16, 32}, {0, 1}});

void BM_LambdaMaxEstimate(benchmark::State& state) {
  const auto side = static_cast<hodge::Index>(state.range(0));
  const auto L = hodge::hodge_laplacian(hodge::make_grid(side, side), 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(hodge::estimate_lambda_max(L));
  }
}
BENCHMARK(BM_LambdaMaxEstimate)->Arg(8)->Arg(32);

}  // namespace
