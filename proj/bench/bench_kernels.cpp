// Serial reference versus OpenMP kernels. Run with
// --benchmark_filter=Gemm or --benchmark_filter=Timestamp to narrow.

#include <benchmark/benchmark.h>

#include <vector>

#include "support.hpp"
#include "tcgen/embedder.hpp"
#include "tcgen/kernels.hpp"
#include "tcgen/timestamp.hpp"

namespace {

using tcgen::Execution;
using tcgen::Rng;

std::vector<double> random_values(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.normal();
  return v;
}

template <Execution kMode>
void BM_Gemm(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(7);
  const auto a = random_values(rng, n * n);
  const auto b = random_values(rng, n * n);
  std::vector<double> c(n * n);
  for (auto _ : state) {
    if constexpr (kMode == Execution::kSerial)
      tcgen::kernels::serial::gemm(a, b, c, n, n, n, false);
    else
      tcgen::kernels::parallel::gemm(a, b, c, n, n, n, false);
    benchmark::DoNotOptimize(c.data());
    benchmark::ClobberMemory();
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(n * n * n));
}
BENCHMARK(BM_Gemm<Execution::kSerial>)->Arg(64)->Arg(128)->Arg(256);
BENCHMARK(BM_Gemm<Execution::kParallel>)->Arg(64)->Arg(128)->Arg(256);

template <Execution kMode>
void BM_TimestampMatrix(benchmark::State& state) {
  Rng rng(11);
  std::vector<tcgen::TimedCaption> captions;
  for (int i = 0; i < 64; ++i) captions.push_back(tcgen::testing::random_caption(rng));
  const tcgen::StubEmbedder embedder(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    for (const auto& caption : captions) {
      auto m = tcgen::build_timestamp_matrix(caption, embedder, tcgen::kDefaultFrameSeconds, kMode);
      benchmark::DoNotOptimize(m);
    }
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(captions.size()));
}
BENCHMARK(BM_TimestampMatrix<Execution::kSerial>)->Arg(64)->Arg(512);
BENCHMARK(BM_TimestampMatrix<Execution::kParallel>)->Arg(64)->Arg(512);

}  // namespace

BENCHMARK_MAIN();
