#include <benchmark/benchmark.h>

#include <cmath>
#include <random>
#include <vector>

#include "fblab/barrier.hpp"
#include "fblab/geometry.hpp"
#include "fblab/hodograph.hpp"
#include "fblab/pde.hpp"
#include "fblab/selfsim.hpp"
#include "fblab/specfun.hpp"

using namespace fblab;

namespace {

void kummer_series(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(specfun::kummer_m(-0.35, 1.5, 12.3));
  }
}
BENCHMARK(kummer_series);

void tricomi_connection(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(specfun::tricomi_u(-0.35, 1.5, 2.7));
  }
}
BENCHMARK(tricomi_connection);

void scaled_zero(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(specfun::scaled_zero_m(0.8, 3));
  }
}
BENCHMARK(scaled_zero);

void exponent_matching(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(selfsim::solve_alpha(3, 0.1).alpha);
  }
}
BENCHMARK(exponent_matching);

void nonlinear_solve_1d(benchmark::State& state) {
  const int cells = static_cast<int>(state.range(0));
  const pde::SpaceTimeBox box{{-1.2}, {1.2}, -1.0, 0.0};
  const pde::SolveSteps steps{{cells}, 16};
  const double h = 2.4 / cells;
  const auto data = [](const std::vector<double>& x, double t) {
    return x[0] + 0.01 * std::sin(2.0 * x[0]) * (0.9 + 0.1 * std::sin(3.0 * t));
  };
  for (auto _ : state) {
    const GridField w = pde::solve_nonlinear(1.0, 0.5, box, data, steps, 2.0 * h);
    benchmark::DoNotOptimize(w.value(cells / 2, 16));
  }
}
BENCHMARK(nonlinear_solve_1d)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

void barrier_scan(benchmark::State& state) {
  barrier::BarrierSpec spec;
  spec.n = 3;
  spec.K = 128.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(barrier::subsolution_scan(spec, 80));
  }
}
BENCHMARK(barrier_scan)->Unit(benchmark::kMillisecond);

void hodograph_transform(benchmark::State& state) {
  const int nodes = static_cast<int>(state.range(0));
  const double h = 1.0 / (nodes - 1);
  GridField field(1, {-0.5}, {h}, {nodes}, 0.0, 0.05, 5);
  for (int k = 0; k < 5; ++k) {
    for (int i = 0; i < nodes; ++i) {
      const double x = field.coord(0, i);
      field.at(i, k) = x + 0.1 * std::sin(x);
    }
  }
  for (auto _ : state) {
    const auto patch = hodograph::forward_transform(field, 0.3);
    benchmark::DoNotOptimize(patch.h.value(nodes / 2, 2));
  }
}
BENCHMARK(hodograph_transform)->Arg(201)->Arg(801);

void hausdorff_pairs(benchmark::State& state) {
  const int count = static_cast<int>(state.range(0));
  std::mt19937 rng(7u);
  std::uniform_real_distribution<double> coord(-1.0, 1.0);
  PointSet a, b;
  for (int i = 0; i < count; ++i) {
    a.points.push_back({coord(rng), coord(rng), coord(rng)});
    b.points.push_back({coord(rng), coord(rng), coord(rng)});
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(hausdorff_distance(a, b));
  }
}
BENCHMARK(hausdorff_pairs)->Arg(64)->Arg(512);

}  // namespace

BENCHMARK_MAIN();
