#include <benchmark/benchmark.h>

#include <random>

#include "vamod/accountability.hpp"
#include "vamod/synth.hpp"
#include "vamod/valueadded.hpp"

using namespace vamod;

namespace {

Cohort cohort_of(std::size_t schools) {
  auto config = default_synth_config();
  config.n_schools = schools;
  config.seed = 11;
  return generate_cohort(config);
}

void BM_GenerateCohort(benchmark::State& state) {
  auto config = default_synth_config();
  config.n_schools = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(generate_cohort(config));
}
BENCHMARK(BM_GenerateCohort)->Arg(60)->Arg(600)->Unit(benchmark::kMillisecond);

void BM_FitOls(benchmark::State& state) {
  const auto n = state.range(0), k = state.range(1);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> z;
  Eigen::MatrixXd X(n, k);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    for (Eigen::Index j = 1; j < k; ++j) X(i, j) = z(rng);
    y(i) = z(rng);
  }
  for (auto _ : state) benchmark::DoNotOptimize(fit_ols(X, y));
}
BENCHMARK(BM_FitOls)->Args({1000, 10})->Args({100000, 78})->Unit(benchmark::kMillisecond);

void BM_RunPipeline(benchmark::State& state) {
  const auto cohort = cohort_of(static_cast<std::size_t>(state.range(0)));
  const auto spec = state.range(1) ? SpecName::adjusted : SpecName::base;
  for (auto _ : state) benchmark::DoNotOptimize(run_pipeline(cohort, spec));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * cohort.n_pupils()));
}
BENCHMARK(BM_RunPipeline)->Args({600, 0})->Args({600, 1})->Unit(benchmark::kMillisecond);

void BM_GroupGaps(benchmark::State& state) {
  const auto cohort = cohort_of(600);
  const auto scores = run_pipeline(cohort, SpecName::base).pupil_score_values();
  for (auto _ : state) benchmark::DoNotOptimize(group_gaps(scores, cohort, Characteristic::ethnicity));
}
BENCHMARK(BM_GroupGaps)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
