#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "deepsel/bench.hpp"
#include "deepsel/context_net.hpp"
#include "deepsel/datamodel.hpp"
#include "deepsel/plants.hpp"
#include "deepsel/solver.hpp"
#include "deepsel/trajectory.hpp"
#include "deepsel/trajectory_io.hpp"

namespace deepsel {

enum class InitialDistribution { kRandomRolloutSuffix, kArchiveDraw };
enum class ReferenceStrategy { kConstantSetpoint, kPerturbation, kPrimitives, kRelative };
enum class PrimitiveKind { kStep, kRamp, kSinusoid, kReturnToOrigin };

InitialDistribution parse_initial_distribution(std::string_view name);
std::string_view to_string(InitialDistribution d) noexcept;
ReferenceStrategy parse_reference_strategy(std::string_view name);
std::string_view to_string(ReferenceStrategy s) noexcept;

struct SamplerSpec {
  InitialDistribution init_dist = InitialDistribution::kRandomRolloutSuffix;
  ReferenceStrategy ref_strategy = ReferenceStrategy::kRelative;
  double alpha = 0.1;
  Index t_sim = 40;
};

struct InitialSamplerConfig {
  /// Random-input steps after the reset; the last T_ini of them form the
  /// initial trajectory.
  Index burn_in = 20;
  double input_amplitude = 1.0;
  double reset_scale = 1.0;
  /// Windows for kArchiveDraw; must outlive the sampler call.
  std::span<const ArchivedTrajectory> archive;
};

/// Parameters of p(r | u_ini, y_ini). Vectors broadcast when they hold one
/// entry.
struct ReferenceConfig {
  Vec setpoint_lower = Vec::Constant(1, -1.0);  ///< constant_setpoint box
  Vec setpoint_upper = Vec::Constant(1, 1.0);
  Vec perturbation_std = Vec::Constant(1, 0.1);  ///< around 1_N (x) y_last
  double primitive_amplitude = 1.0;              ///< |a| upper bound
  double primitive_min_period = 5.0;             ///< sinusoid period range, steps
  double primitive_max_period = 40.0;
  Vec relative_delta = Vec::Constant(1, 0.5);    ///< Delta r ~ U[-d, d] per channel
  double relative_jitter_std = 0.0;              ///< iid noise added to each Delta r_k
};

struct InitialCondition {
  Vec state;  ///< x_t, the state whose output is not yet measured
  Vec u_ini;
  Vec y_ini;
};

InitialCondition sample_initial(const PlantModel& plant, const ContextDims& dims,
                                const SamplerSpec& spec, const InitialSamplerConfig& cfg,
                                std::uint64_t seed);

/// Deterministic primitive over N steps. Ramp goes 0 -> a as a*k/(N-1);
/// step is a; sinusoid a*sin(2 pi k / period + phase); return-to-origin
/// decays y_last linearly to zero at k = N-1.
Vec make_primitive(PrimitiveKind kind, const Vec& amplitude, double period, double phase,
                   const Vec& y_last, Index horizon);

Vec sample_reference(const Vec& y_ini, const ContextDims& dims, ReferenceStrategy strategy,
                     const ReferenceConfig& cfg, std::uint64_t seed);

/// Independent Bernoulli(alpha) bits.
IndicatorVector sample_indicator(Index columns, double alpha, std::uint64_t seed);

/// Redraws until popcount >= k_min; `resamples` counts the redraws.
IndicatorVector sample_indicator(Index columns, double alpha, Index k_min, std::uint64_t seed,
                                 int* resamples);

enum class SampleStatus { kOk, kInfeasible, kDiverged };

std::string_view to_string(SampleStatus s) noexcept;
SampleStatus parse_sample_status(std::string_view name);

struct TrainingSample {
  Index index = 0;
  Vec u_ini;
  Vec y_ini;
  Vec r;
  IndicatorVector s;
  double cost = 0.0;
  SampleStatus status = SampleStatus::kOk;
  std::uint64_t seed = 0;
  Index t_sim = 0;
  double alpha = 0.0;
  int resamples = 0;
  Index infeasible_steps = 0;
};

struct DatasetHeader {
  ContextDims dims;
  Index columns = 0;
  double alpha = 0.0;
  Index t_sim = 0;
  std::uint64_t master_seed = 0;
  double penalty = 0.0;
};

struct Dataset {
  DatasetHeader header;
  std::vector<TrainingSample> samples;
};

struct GenerationSetup {
  const PlantModel* plant = nullptr;
  const HankelSet* hankel = nullptr;
  SamplerSpec spec;
  InitialSamplerConfig initial;
  ReferenceConfig reference;
  DeepcConfig deepc;
  NoiseSpec noise;  ///< measurement noise std during closed-loop runs
  /// Popcount floor; 0 selects (m + p) * T_ini.
  Index k_min = 0;
  /// Cost recorded when no feasible sample exists to scale the penalty.
  double fallback_penalty = 1e6;
  unsigned threads = 1;
  /// Called after each sample with (done, total); may be empty.
  std::function<void(std::size_t, std::size_t)> progress;
};

/// One training sample: draw context and subset, run closed loop with
/// the subset held fixed, record the cost.
TrainingSample generate_sample(const GenerationSetup& setup, Index i, std::uint64_t master_seed);

/// generate_sample over N_train samples. Samples with an infeasible step or a
/// divergent state are flagged and assigned 10x the 95th percentile of the
/// feasible costs in the batch.
Dataset generate_dataset(const GenerationSetup& setup, Index n_train, std::uint64_t master_seed);

/// JSON-lines: one header object, then one object per sample.
void write_dataset(const std::filesystem::path& path, const Dataset& ds);
Dataset read_dataset(const std::filesystem::path& path);

/// Network-ready samples for a given context encoding.
std::vector<NetSample> to_net_samples(const Dataset& ds, ContextEncoding enc);

struct EnsembleOptions {
  std::vector<Index> hidden{256, 256, 256};
  Activation activation = Activation::kRelu;
  ContextEncoding encoding = ContextEncoding::kRelative;
  TrainOptions train;
};

struct EnsembleReport {
  double alpha = 0.0;
  bool ok = false;
  double validation_loss = 0.0;
  double train_loss = 0.0;
  std::string error;
};

/// One network per dataset alpha; a divergent alpha is reported and skipped.
ModelRegistry train_alpha_ensemble(std::span<const Dataset> datasets, const EnsembleOptions& opts,
                                   std::vector<EnsembleReport>* report = nullptr);

}  // namespace deepsel
