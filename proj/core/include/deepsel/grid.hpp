#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "deepsel/bench.hpp"
#include "deepsel/pipeline.hpp"

namespace deepsel {

/// Cost-versus-K study: every (method, K, seed) cell is one closed-loop run.
struct ExperimentGrid {
  std::vector<BenchMethod> methods;
  std::vector<Index> k_values;
  std::vector<std::uint64_t> seeds;
  const PlantModel* plant = nullptr;
  const HankelSet* hankel = nullptr;
  DeepcConfig deepc;
  Index t_sim = 40;
  /// Each seed draws one initial condition and reference shared by all cells.
  SamplerSpec scenario;
  InitialSamplerConfig initial;
  ReferenceConfig reference;
  NoiseSpec noise;
  bool record_step_time = true;
  /// Largest |alpha M - K| / K accepted when picking a model for K.
  double max_rel_gap = 1.0;
  unsigned threads = 1;
};

struct GridRow {
  BenchMethod method = BenchMethod::kRandom;
  Index k = 0;
  std::uint64_t seed = 0;
  double cost = 0.0;
  double iae = 0.0;
  double ise = 0.0;
  double mean_step_ms = 0.0;
  Index infeasible_steps = 0;
  bool aborted = false;
  std::string error;
};

struct GridScenario {
  InitialCondition initial;
  Vec track;
};

GridScenario make_grid_scenario(const ExperimentGrid& grid, std::uint64_t seed);

/// Rows in (method, K, seed) order. A failing cell is recorded as aborted.
std::vector<GridRow> run_grid(const ExperimentGrid& grid, const ModelRegistry* registry);

struct AggregateRow {
  BenchMethod method = BenchMethod::kRandom;
  Index k = 0;
  Index runs = 0;
  Index aborted = 0;
  double cost_mean = 0.0;
  double cost_std = 0.0;
  double iae_mean = 0.0;
  double iae_std = 0.0;
  double ise_mean = 0.0;
  double ise_std = 0.0;
  double step_ms_mean = 0.0;
  double infeasible_mean = 0.0;
};

/// Mean and sample standard deviation across seeds per (method, K).
std::vector<AggregateRow> aggregate(const std::vector<GridRow>& rows);

inline constexpr const char* kResultsHeader =
    "method,K,seed,cost,iae,ise,mean_step_ms,infeasible_steps";

void write_results_csv(const std::filesystem::path& path, const std::vector<GridRow>& rows);
std::vector<GridRow> read_results_csv(const std::filesystem::path& path);
void write_aggregate_tsv(const std::filesystem::path& path, const std::vector<AggregateRow>& agg);
/// One block per method: "K cost_mean cost_std", blocks separated by two blank lines.
void write_gnuplot_dat(const std::filesystem::path& path, const std::vector<AggregateRow>& agg);
std::string format_report(const std::vector<AggregateRow>& agg);

}  // namespace deepsel
