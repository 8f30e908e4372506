#include <benchmark/benchmark.h>

#include <random>

#include "mcboost/data.hpp"
#include "mcboost/dynamics.hpp"
#include "mcboost/hypothesis.hpp"
#include "mcboost/linalg.hpp"
#include "mcboost/trees.hpp"

using namespace mcboost;

namespace {

Matrix random_matrix(std::uint64_t seed, std::size_t rows, std::size_t cols) {
  std::mt19937_64 rng(seed);
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = normal01(rng);
  return m;
}

void BM_SvdTall(benchmark::State& state) {
  const Matrix m = random_matrix(1, static_cast<std::size_t>(state.range(0)), 8);
  for (auto _ : state) {
    benchmark::DoNotOptimize(svd(m));
  }
}
BENCHMARK(BM_SvdTall)->Arg(200)->Arg(2000);

void BM_Pinv(benchmark::State& state) {
  const Matrix m = random_matrix(2, 60, 12);
  for (auto _ : state) {
    benchmark::DoNotOptimize(pinv(m));
  }
}
BENCHMARK(BM_Pinv);

void BM_FitTree(benchmark::State& state) {
  const data::Dataset ds = data::make_synthetic(3, static_cast<std::size_t>(state.range(0)), 10);
  for (auto _ : state) {
    benchmark::DoNotOptimize(trees::fit_tree(ds.x, ds.y, 3));
  }
}
BENCHMARK(BM_FitTree)->Arg(2000)->Arg(20000);

void BM_GbmFit(benchmark::State& state) {
  const data::Dataset ds = data::make_synthetic(4, 1000, 8);
  for (auto _ : state) {
    benchmark::DoNotOptimize(trees::gbm_fit(ds.x, ds.y, 20, 0.1, 3));
  }
}
BENCHMARK(BM_GbmFit);

void BM_RfFit(benchmark::State& state) {
  const data::Dataset ds = data::make_synthetic(5, 1000, 8);
  for (auto _ : state) {
    benchmark::DoNotOptimize(trees::rf_fit(ds.x, ds.y, 20, 5, 0));
  }
}
BENCHMARK(BM_RfFit);

void BM_ExactProjectionRound(benchmark::State& state) {
  const data::Dataset ds = data::make_synthetic(6, static_cast<std::size_t>(state.range(0)), 4);
  const Vector f0(ds.y.size(), 0.0);
  const dynamics::OracleMode mode =
      dynamics::ExactProjection{hypothesis::intercept_slope_class(4), 1e-12};
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        dynamics::step(ds.x, ds.y, f0, dynamics::UnitRule{}, mode, 1.0, 0));
  }
}
BENCHMARK(BM_ExactProjectionRound)->Arg(500)->Arg(5000);

void BM_BoostedRound(benchmark::State& state) {
  const data::Dataset ds = data::make_synthetic(7, 2000, 6);
  const Vector f0(ds.y.size(), 0.0);
  const dynamics::OracleMode mode = dynamics::BoostedTrees{100, 0.1, 3, 1};
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        dynamics::step(ds.x, ds.y, f0, dynamics::UnitRule{}, mode, 1.0, 0));
  }
}
BENCHMARK(BM_BoostedRound);

}  // namespace

BENCHMARK_MAIN();
