#include <benchmark/benchmark.h>

#include <random>

#include "deepsel/context_net.hpp"
#include "deepsel/datamodel.hpp"
#include "deepsel/selection.hpp"

using namespace deepsel;

namespace {

Vec random_vec(Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d;
  Vec v(n);
  for (Index i = 0; i < n; ++i) v(i) = d(rng);
  return v;
}

// One forward pass of a 3x256 network emitting M+1 outputs.
void BM_NetForward(benchmark::State& state) {
  const Index m = state.range(0);
  const ContextNet net({24, 256, 256, 256, m + 1}, Activation::kRelu, 3);
  const Vec c = random_vec(24, 4);
  for (auto _ : state) benchmark::DoNotOptimize(net.forward(c));
}
BENCHMARK(BM_NetForward)->Arg(100)->Arg(400)->Arg(1600)->Unit(benchmark::kMicrosecond);

void BM_NetLossGrad(benchmark::State& state) {
  const Index m = 400;
  const ContextNet net({24, 64, 64, m + 1}, Activation::kTanh, 5);
  std::mt19937_64 rng(6);
  std::bernoulli_distribution coin(0.25);
  std::vector<NetSample> batch(static_cast<std::size_t>(state.range(0)));
  for (auto& s : batch) {
    s.context = random_vec(24, rng());
    s.indicator = Vec(m);
    for (Index j = 0; j < m; ++j) s.indicator(j) = coin(rng) ? 1.0 : 0.0;
    s.cost = 1.0;
  }
  for (auto _ : state) benchmark::DoNotOptimize(net_loss_grad(net, batch, 1e-4));
}
BENCHMARK(BM_NetLossGrad)->Arg(32)->Arg(128)->Unit(benchmark::kMicrosecond);

void BM_SelectTopk(benchmark::State& state) {
  const Vec theta = random_vec(state.range(0), 7);
  const Index k = state.range(0) / 4;
  for (auto _ : state) benchmark::DoNotOptimize(select_topk(theta, k));
}
BENCHMARK(BM_SelectTopk)->Arg(400)->Arg(4000);

void BM_SelectBudget(benchmark::State& state) {
  const Vec theta = random_vec(state.range(0), 8);
  for (auto _ : state) benchmark::DoNotOptimize(select_budget(theta, -5.0));
}
BENCHMARK(BM_SelectBudget)->Arg(400)->Arg(4000);

void BM_RidgeFit(benchmark::State& state) {
  const Index m = state.range(0);
  const Index n = 4 * m;
  std::mt19937_64 rng(9);
  std::bernoulli_distribution coin(0.25);
  Mat s(n, m);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < m; ++j) s(i, j) = coin(rng) ? 1.0 : 0.0;
  const Vec j = random_vec(n, 10);
  for (auto _ : state) benchmark::DoNotOptimize(ridge_fit(s, j, 1e-2));
}
BENCHMARK(BM_RidgeFit)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

}  // namespace
