#include "fanomech/model.hpp"
#include "fanomech/observables.hpp"
#include "fanomech/solver.hpp"

#include <benchmark/benchmark.h>

using namespace fanomech;

namespace {

SystemParams params() {
  SystemParams p;
  p.Omega_m = 2e-6;
  p.g_a_omega = 0.25 * p.Omega_m;
  return with_eta(p, 0.5);
}

LindbladModel two_mode(std::size_t b) {
  const SystemParams p = params();
  return build_effective_two_mode_model(p, {2e-9, 0.0}, 0.25 * p.Omega_m, {4, b});
}

void BM_BuildLiouvillian(benchmark::State& state) {
  const auto m = two_mode(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(build_liouvillian(m));
}
BENCHMARK(BM_BuildLiouvillian)->Arg(10)->Arg(20)->Arg(40)->Unit(benchmark::kMillisecond);

void BM_SteadyState(benchmark::State& state) {
  const auto L = build_liouvillian(two_mode(static_cast<std::size_t>(state.range(0))));
  for (auto _ : state) benchmark::DoNotOptimize(steady_state(L));
}
BENCHMARK(BM_SteadyState)->Arg(4)->Arg(10)->Arg(20)->Unit(benchmark::kMillisecond);

void BM_LiouvillianApply(benchmark::State& state) {
  const auto L = build_liouvillian(two_mode(static_cast<std::size_t>(state.range(0))));
  const Vector v = Vector::Random(static_cast<Eigen::Index>(L.dim() * L.dim()));
  for (auto _ : state) benchmark::DoNotOptimize(L.apply(v));
}
BENCHMARK(BM_LiouvillianApply)->Arg(20)->Arg(35)->Unit(benchmark::kMicrosecond);

void BM_Evolve(benchmark::State& state) {
  const auto m = two_mode(10);
  const auto rho0 = vacuum_state(m.layout);
  for (auto _ : state) benchmark::DoNotOptimize(evolve(m, rho0, {0.0, 50.0}));
}
BENCHMARK(BM_Evolve)->Unit(benchmark::kMillisecond);

void BM_Wigner(benchmark::State& state) {
  const auto layout = SpaceLayout::single("b", 35);
  const auto rho = cat_state(layout, "b", 1.54, CatParity::even);
  const auto grid = GridSpec::for_cat(1.54, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(wigner(rho, grid));
}
BENCHMARK(BM_Wigner)->Arg(101)->Arg(201)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
