#include "lhspline/binning.hpp"
#include "lhspline/density.hpp"
#include "lhspline/evt.hpp"
#include "lhspline/fit.hpp"
#include "lhspline/uncertainty.hpp"

#include <benchmark/benchmark.h>

#include <map>

using namespace lhspline;

namespace {

const FitContext& context(std::size_t bins) {
  static std::map<std::size_t, FitContext> cache;
  auto it = cache.find(bins);
  if (it == cache.end()) {
    Rng rng(1);
    const auto y = egpd::simulate(18250, {}, rng);
    it = cache.emplace(bins, FitContext(build_histogram(y, {.n_bins = bins}))).first;
  }
  return it->second;
}

}  // namespace

static void BM_PenaltyMatrix(benchmark::State& state) {
  const auto& knots = context(static_cast<std::size_t>(state.range(0))).histogram().knots;
  for (auto _ : state) benchmark::DoNotOptimize(penalty_matrix(knots));
}
BENCHMARK(BM_PenaltyMatrix)->Arg(50)->Arg(150)->Arg(400);

static void BM_IrlsFit(benchmark::State& state) {
  const auto& ctx = context(static_cast<std::size_t>(state.range(0)));
  const double lambda = default_lambda_grid(ctx)[20];
  for (auto _ : state) benchmark::DoNotOptimize(irls_fit(ctx, lambda));
}
BENCHMARK(BM_IrlsFit)->Arg(50)->Arg(150)->Arg(400);

static void BM_SelectLambda(benchmark::State& state) {
  const auto& ctx = context(150);
  const auto grid = default_lambda_grid(ctx);
  for (auto _ : state) benchmark::DoNotOptimize(select_lambda(ctx, grid));
}
BENCHMARK(BM_SelectLambda)->Unit(benchmark::kMillisecond);

static void BM_Normalize(benchmark::State& state) {
  const auto& ctx = context(150);
  const auto fit = irls_fit(ctx, default_lambda_grid(ctx)[20]);
  for (auto _ : state) benchmark::DoNotOptimize(normalize(fit.spline, ctx.histogram()));
}
BENCHMARK(BM_Normalize);

static void BM_ConditionalSimulation(benchmark::State& state) {
  const auto& ctx = context(150);
  const auto fit = irls_fit(ctx, default_lambda_grid(ctx)[20]);
  const auto base = normalize(fit.spline, ctx.histogram());
  for (auto _ : state) {
    benchmark::DoNotOptimize(conditional_simulate(ctx, fit, base, static_cast<std::size_t>(state.range(0)), 7));
  }
}
BENCHMARK(BM_ConditionalSimulation)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
