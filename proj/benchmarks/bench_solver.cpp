#include <benchmark/benchmark.h>

#include "deepsel/plants.hpp"
#include "deepsel/rng.hpp"
#include "deepsel/solver.hpp"
#include "deepsel/trajectory.hpp"

using namespace deepsel;

namespace {

const HankelSet& lti2_data() {
  static const HankelSet h = [] {
    const PlantModel plant = make_plant(PlantKind::kLti2);
    Rng rng(1);
    const Trajectory traj = rollout(plant, Vec::Zero(2), random_inputs(plant, 1613, 1.0, rng));
    return build_hankel(std::span(&traj, 1), 4, 10);
  }();
  return h;
}

HankelSet first_columns(Index k) {
  std::vector<Index> idx(static_cast<std::size_t>(k));
  for (Index j = 0; j < k; ++j) idx[static_cast<std::size_t>(j)] = j;
  return extract_columns(lti2_data(), ColumnSubset(std::move(idx), lti2_data().columns()));
}

// Reduced DeePC solve time against the number of kept columns M'.
void BM_SolveDeepc(benchmark::State& state) {
  const HankelSet h = first_columns(state.range(0));
  const DeepcConfig cfg = DeepcConfig::identity(1, 1, 0.1);
  const Vec u_ini = h.Up.col(0);
  const Vec y_ini = h.Yp.col(0);
  const Vec ref = Vec::Constant(10, 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(solve_deepc(h, u_ini, y_ini, ref, cfg));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_SolveDeepc)->RangeMultiplier(2)->Range(25, 1600)->Complexity(benchmark::oNCubed)
    ->Unit(benchmark::kMicrosecond);

void BM_SolveDeepcBoxed(benchmark::State& state) {
  const HankelSet h = first_columns(state.range(0));
  DeepcConfig cfg = DeepcConfig::identity(1, 1, 0.1);
  cfg.u_box = ChannelBox{Vec::Constant(1, -0.2), Vec::Constant(1, 0.2)};
  const Vec u_ini = h.Up.col(0);
  const Vec y_ini = h.Yp.col(0);
  const Vec ref = Vec::Constant(10, 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(solve_deepc(h, u_ini, y_ini, ref, cfg));
}
BENCHMARK(BM_SolveDeepcBoxed)->Arg(50)->Arg(200)->Arg(800)->Unit(benchmark::kMicrosecond);

void BM_BuildHankel(benchmark::State& state) {
  const PlantModel plant = make_plant(PlantKind::kPendulum);
  Rng rng(2);
  std::vector<Trajectory> trajs;
  for (int i = 0; i < 20; ++i) trajs.push_back(rollout(plant, Vec::Zero(2), random_inputs(plant, 60, 1.0, rng)));
  for (auto _ : state) benchmark::DoNotOptimize(build_hankel(trajs, 4, 10));
}
BENCHMARK(BM_BuildHankel)->Unit(benchmark::kMicrosecond);

}  // namespace
