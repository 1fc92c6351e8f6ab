#include <benchmark/benchmark.h>

#include <vector>

#include "adazo/sketch.hpp"

namespace {

using namespace adazo;

SketchSpec spec_for(SketchVariant variant, int d, int l) {
  SketchSpec spec;
  spec.family.variant = variant;
  spec.family.sparsity_s = 4;
  spec.dim = d;
  spec.num_cols = l;
  spec.seed = 12345;
  return spec;
}

void BM_BuildGaussian(benchmark::State& state) {
  const auto spec = spec_for(SketchVariant::gaussian,
                             static_cast<int>(state.range(0)), 16);
  std::uint64_t t = 0;
  for (auto _ : state) {
    RngStream rng = RngStream::derive(1, stream_slot::kSketch, t++);
    benchmark::DoNotOptimize(build_sketch(spec, rng));
  }
}
BENCHMARK(BM_BuildGaussian)->Arg(64)->Arg(256)->Arg(1024);

void BM_BuildSrht(benchmark::State& state) {
  const auto spec =
      spec_for(SketchVariant::srht, static_cast<int>(state.range(0)), 16);
  std::uint64_t t = 0;
  for (auto _ : state) {
    RngStream rng = RngStream::derive(1, stream_slot::kSketch, t++);
    benchmark::DoNotOptimize(build_sketch(spec, rng));
  }
}
BENCHMARK(BM_BuildSrht)->Arg(64)->Arg(256)->Arg(1024);

void BM_BuildSparse(benchmark::State& state) {
  const auto spec = spec_for(SketchVariant::sparse_embedding,
                             static_cast<int>(state.range(0)), 16);
  std::uint64_t t = 0;
  for (auto _ : state) {
    RngStream rng = RngStream::derive(1, stream_slot::kSketch, t++);
    benchmark::DoNotOptimize(build_sketch(spec, rng));
  }
}
BENCHMARK(BM_BuildSparse)->Arg(64)->Arg(256)->Arg(1024);

void BM_Fwht(benchmark::State& state) {
  std::vector<double> v(static_cast<std::size_t>(state.range(0)));
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = static_cast<double>(i % 7) - 3.0;
  }
  for (auto _ : state) {
    fwht(v);
    benchmark::DoNotOptimize(v.data());
  }
}
BENCHMARK(BM_Fwht)->Arg(256)->Arg(1024)->Arg(4096);

}  // namespace

BENCHMARK_MAIN();
