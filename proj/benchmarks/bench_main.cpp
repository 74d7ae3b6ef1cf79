#include <benchmark/benchmark.h>

#include <cmath>
#include <numbers>

#include "fkhom/chain.hpp"
#include "fkhom/macro.hpp"
#include "fkhom/rotation.hpp"

using namespace fkhom;

namespace {

void BM_EulerStep(benchmark::State& state) {
  auto model = std::make_shared<const ForceModel>(build_classical_fk({1.0}, 1.0, 2.0, 0.01));
  auto chain = init_linear(model, Slope(1, 1), static_cast<int>(state.range(0)));
  const double dt = cfl_dt(*model, 0.5);
  for (auto _ : state) {
    step(chain, dt);
    benchmark::DoNotOptimize(chain.U.data());
  }
  state.SetItemsProcessed(state.iterations() * chain.size());
}
BENCHMARK(BM_EulerStep)->Arg(16)->Arg(256)->Arg(4096);

void BM_RotationNumber(benchmark::State& state) {
  const auto model = build_classical_fk({1.0}, 1.0, 0.0, 0.01);
  RotationOptions o;
  o.tol = 1e-4;
  o.T_cap = 1000;
  o.cells = 1;
  const double L = static_cast<double>(state.range(0)) / 4.0;
  for (auto _ : state) benchmark::DoNotOptimize(rotation_number(model, Slope(1, 1), L, o).lambda_hat);
}
BENCHMARK(BM_RotationNumber)->Arg(4)->Arg(8)->Arg(12)->Unit(benchmark::kMillisecond);

void BM_SolveHJ(benchmark::State& state) {
  const HamiltonianInterp H({0.8, 1.0, 1.25}, {1.2, 1.74, 2.1});
  const auto u0 = Profile::from_function([](double x) { return x + 0.03 * std::sin(2.0 * std::numbers::pi * x); });
  const double dx = 1.0 / static_cast<double>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(solve_hj(H, u0, -5.0, 5.0, dx, 1.0).u.back());
}
BENCHMARK(BM_SolveHJ)->Arg(100)->Arg(400)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
