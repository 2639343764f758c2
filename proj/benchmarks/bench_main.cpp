#include <benchmark/benchmark.h>

#include "mottrw/env.hpp"
#include "mottrw/kernel.hpp"
#include "mottrw/network.hpp"
#include "mottrw/walk.hpp"

using namespace mottrw;

namespace {

WalkConfig config(double lambda, int rho) {
  WalkConfig c;
  c.lambda = lambda;
  c.rho = rho;
  return c;
}

const EnvironmentSpec kRenewal = EnvironmentSpec::renewal_exponential(1.0, 2.0);

void BM_WalkerStep(benchmark::State& state) {
  const int rho = state.range(0) == 0 ? kRhoInfinite : static_cast<int>(state.range(0));
  const Kernel k(config(0.5, rho), kRenewal);
  Environment env(kRenewal, 1, {-256, 4096});
  Walker w(env, k, make_engine(1, 0, 0), 0);
  for (auto _ : state) benchmark::DoNotOptimize(w.step());
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_WalkerStep)->Arg(1)->Arg(4)->Arg(16)->Arg(0);

void BM_JumpDistribution(benchmark::State& state) {
  const Kernel k(config(0.5, kRhoInfinite), kRenewal);
  Environment env(kRenewal, 2, {-512, 512});
  std::int64_t i = -200;
  for (auto _ : state) {
    benchmark::DoNotOptimize(k.jump_distribution(env, i));
    i = i == 200 ? -200 : i + 1;
  }
}
BENCHMARK(BM_JumpDistribution);

void BM_ConductanceSolve(benchmark::State& state) {
  const int rho = static_cast<int>(state.range(0));
  const Kernel k(config(0.5, rho), kRenewal);
  Environment env(kRenewal, 3, {-4096, 4096});
  const std::int64_t half = state.range(1);
  for (auto _ : state)
    benchmark::DoNotOptimize(
        eff_conductance_window(env, k, SiteSet::point(0), SiteSet::outside(-half, half), rho, {-half - 64, half + 64}).value);
}
BENCHMARK(BM_ConductanceSolve)->Args({1, 256})->Args({4, 256})->Args({16, 256})->Args({4, 2048});

}  // namespace
BENCHMARK_MAIN();
