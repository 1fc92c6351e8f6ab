#include <benchmark/benchmark.h>

#include "adazo/estimator.hpp"
#include "adazo/solver.hpp"

namespace {

using namespace adazo;

void BM_Estimate(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  Eigen::VectorXd lam(d);
  double v = 1.0;
  for (int i = 0; i < d; ++i) {
    lam[i] = v;
    v *= 0.9;
  }
  const Objective obj =
      make_quadratic(PSDMatrix::diagonal(lam), Eigen::VectorXd::Zero(d));
  const Eigen::VectorXd x = Eigen::VectorXd::Ones(d);
  SketchSpec spec;
  spec.dim = d;
  spec.num_cols = 16;
  std::uint64_t t = 0;
  for (auto _ : state) {
    RngStream rng = RngStream::derive(7, stream_slot::kSketch, t++);
    const SketchMatrix S = build_sketch(spec, rng);
    benchmark::DoNotOptimize(estimate(obj, x, 1e-3, S));
  }
}
BENCHMARK(BM_Estimate)->Arg(64)->Arg(256)->Arg(1024);

void BM_AdaptiveDetIteration(benchmark::State& state) {
  const int d = 64;
  Eigen::VectorXd lam(d);
  double v = 1.0;
  for (int i = 0; i < d; ++i) {
    lam[i] = v;
    v *= 0.9;
  }
  const Objective obj =
      make_quadratic(PSDMatrix::diagonal(lam), Eigen::VectorXd::Zero(d));
  SketchSpec spec;
  spec.dim = d;
  spec.num_cols = 16;
  const long iters = state.range(0);
  const Schedule sched = derive_det_schedule(obj, 0.1, iters, 16, 4);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        run_adaptive_det(obj, sched, spec, Eigen::VectorXd::Ones(d), 3));
  }
  state.SetItemsProcessed(state.iterations() * iters);
}
BENCHMARK(BM_AdaptiveDetIteration)->Arg(100)->Arg(400);

}  // namespace
