// Microbenchmarks: approximate vs exact forward stepwise, and the sum-zero
// constrained lasso vs a proximal-gradient lasso on the expanded ratio design.

#include <lrlasso/data.hpp>
#include <lrlasso/logratio.hpp>
#include <lrlasso/simulate.hpp>
#include <lrlasso/solver.hpp>
#include <lrlasso/stepwise.hpp>

#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

using namespace lrlasso;

namespace {

struct Problem {
  Matrix w;
  Vector y;
};

Problem make_problem(Index n, Index p) {
  const Experiment1Data sim = gen_experiment1(n, p, 1.0, 42);
  return {sim.data.x.array().log().matrix(), sim.data.y};
}

void BM_ApproxStepwise(benchmark::State& state) {
  const Problem pr = make_problem(500, state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(approx_forward_stepwise(pr.w, pr.y, 10));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_ApproxStepwise)->Arg(100)->Arg(200)->Arg(400)->Arg(800)->Unit(benchmark::kMillisecond)->Complexity();

// The expansion is built outside the timed loop; only selection is measured.
void BM_ExactStepwiseExpanded(benchmark::State& state) {
  const Problem pr = make_problem(500, state.range(0));
  const RatioExpansion z = expand_ratios(pr.w);
  for (auto _ : state) {
    benchmark::DoNotOptimize(exact_forward_stepwise(z.z, pr.y, 10, Family::gaussian, z.pairs));
  }
  state.counters["columns"] = static_cast<double>(z.z.cols());
}
BENCHMARK(BM_ExactStepwiseExpanded)->Arg(25)->Arg(50)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_ConstrainedLasso(benchmark::State& state) {
  const Problem pr = make_problem(100, state.range(0));
  const double gamma = 0.1 * constrained_gamma_max(pr.w, pr.y, Family::gaussian);
  for (auto _ : state) benchmark::DoNotOptimize(constrained_lasso(pr.w, pr.y, gamma, Family::gaussian));
}
BENCHMARK(BM_ConstrainedLasso)->Arg(10)->Arg(30)->Arg(60)->Unit(benchmark::kMillisecond);

void BM_ExpandedProximalLasso(benchmark::State& state) {
  const Problem pr = make_problem(100, state.range(0));
  const RatioExpansion z = expand_ratios(pr.w);
  const double lambda = 2.0 * 0.1 * constrained_gamma_max(pr.w, pr.y, Family::gaussian);
  for (auto _ : state) benchmark::DoNotOptimize(proximal_gradient_lasso(z.z, pr.y, lambda, 20000, 1e-10));
  state.counters["columns"] = static_cast<double>(z.z.cols());
}
BENCHMARK(BM_ExpandedProximalLasso)->Arg(10)->Arg(30)->Arg(60)->Unit(benchmark::kMillisecond);

void BM_ConstrainedPath(benchmark::State& state) {
  const Problem pr = make_problem(100, state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(lambda_path(pr.w, pr.y, Family::gaussian, 50, 1e-3));
}
BENCHMARK(BM_ConstrainedPath)->Arg(30)->Arg(100)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
