#include "landau/dynamics.hpp"
#include "landau/losses.hpp"
#include "landau/net.hpp"
#include "landau/parallel.hpp"

#include <benchmark/benchmark.h>

#include <numeric>

namespace {

using namespace landau;

ParticleEnsemble gaussian(int d, Index n) { return sample_initial(AnisotropicGaussian{Vec::Ones(d)}, n, 7); }

std::vector<Index> first(Index b) {
  std::vector<Index> idx(static_cast<std::size_t>(b));
  std::iota(idx.begin(), idx.end(), Index{0});
  return idx;
}

void BM_NetForward(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const Index b = state.range(1);
  const auto net = VectorFieldNet::truncated_normal(d, 1);
  const Mat x = gaussian(d, b).velocities;
  Mat u;
  for (auto _ : state) {
    net.evaluate(x, u, nullptr);
    benchmark::DoNotOptimize(u.data());
  }
  state.SetItemsProcessed(state.iterations() * b);
}
BENCHMARK(BM_NetForward)->Args({2, 1024})->Args({10, 1024});

void BM_NetForwardJacobian(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const Index b = state.range(1);
  const auto net = VectorFieldNet::truncated_normal(d, 1);
  const Mat x = gaussian(d, b).velocities;
  Mat u, j;
  for (auto _ : state) {
    net.evaluate(x, u, &j);
    benchmark::DoNotOptimize(j.data());
  }
  state.SetItemsProcessed(state.iterations() * b);
}
BENCHMARK(BM_NetForwardJacobian)->Args({2, 1024})->Args({10, 1024});

void BM_LossGradient(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const Index b = state.range(1);
  const auto scheme = static_cast<Scheme>(state.range(2));
  const auto ens = gaussian(d, 4 * b);
  const auto net = VectorFieldNet::truncated_normal(d, 1);
  const KernelSpec spec = KernelSpec::with_default_guard(d, 0.0, 1.0);
  const LossBatch batch{first(b), scheme, 0.01};
  for (auto _ : state) {
    auto lg = loss_and_gradient(net, ens, batch, spec);
    benchmark::DoNotOptimize(lg.value);
  }
  state.SetItemsProcessed(state.iterations() * b * b);
}
BENCHMARK(BM_LossGradient)
    ->Args({2, 256, static_cast<int>(Scheme::kImplicit)})
    ->Args({2, 256, static_cast<int>(Scheme::kExplicit)})
    ->Args({2, 1280, static_cast<int>(Scheme::kImplicit)})
    ->Args({10, 640, static_cast<int>(Scheme::kImplicit)})
    ->Unit(benchmark::kMillisecond);

void BM_FullUpdate(benchmark::State& state) {
  const Index n = state.range(0);
  const auto ens = gaussian(2, n);
  const auto net = VectorFieldNet::truncated_normal(2, 1);
  const KernelSpec spec = KernelSpec::with_default_guard(2, -3.0, 1.0 / 16.0);
  for (auto _ : state) {
    auto r = full_update(net, ens, spec, 0.1, Scheme::kImplicit);
    benchmark::DoNotOptimize(r.objective);
  }
  state.SetItemsProcessed(state.iterations() * n * n);
}
BENCHMARK(BM_FullUpdate)->Arg(1024)->Arg(4096)->Unit(benchmark::kMillisecond);

void BM_RbmUpdate(benchmark::State& state) {
  const Index n = state.range(0);
  const Index b = state.range(1);
  const auto ens = gaussian(3, n);
  const auto net = VectorFieldNet::truncated_normal(3, 1);
  const KernelSpec spec = KernelSpec::with_default_guard(3, -3.0, 1.0 / 16.0);
  Pcg32 rng(3, streams::kParticleBatching);
  for (auto _ : state) {
    auto r = rbm_update(net, ens, spec, 0.1, Scheme::kImplicit, b, rng);
    benchmark::DoNotOptimize(r.objective);
  }
  state.SetItemsProcessed(state.iterations() * n * b);
}
BENCHMARK(BM_RbmUpdate)->Args({8192, 1280})->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
