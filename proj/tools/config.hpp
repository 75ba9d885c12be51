#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "deepsel/bench.hpp"
#include "deepsel/grid.hpp"
#include "deepsel/pipeline.hpp"
#include "deepsel/plants.hpp"
#include "deepsel/solver.hpp"

namespace deepsel::tools {

struct PlantSection {
  PlantKind kind = PlantKind::kPendulum;
  PlantParams params;            ///< overrides on top of the plant defaults
  std::vector<double> noise_std;  ///< empty or 1 or p entries
};

struct HankelSection {
  Index t_ini = 4;
  Index horizon = 10;
  Index trajectories = 20;
  Index length = 60;
  double input_amplitude = 1.0;
  double reset_scale = 1.0;
};

struct DeepcSection {
  std::vector<double> q{1.0};  ///< diagonal of Q, broadcast when 1 entry
  std::vector<double> r{0.1};  ///< diagonal of R
  double lambda_g = 1.0;
  double lambda_y = 1e5;
  bool slack = true;
  std::optional<std::pair<double, double>> u_box;  ///< applied to every input channel
  std::optional<std::pair<double, double>> y_box;
  double y_box_weight = 1e3;
  double admm_tol = 1e-7;
  int admm_max_iter = 5000;
};

struct DatamodelSection {
  ContextEncoding encoding = ContextEncoding::kRelative;
  std::vector<Index> hidden{256, 256, 256};
  Activation activation = Activation::kRelu;
  double lr = 1e-3;
  int epochs = 100;
  Index batch_size = 64;
  double lambda_phi = 1e-6;
  double validation_fraction = 0.1;
  std::vector<double> alphas{0.05, 0.1, 0.25};
  Index n_train = 2000;
  Index t_sim = 40;
  Index k_min = 0;
  InitialDistribution init_dist = InitialDistribution::kRandomRolloutSuffix;
  ReferenceStrategy ref_strategy = ReferenceStrategy::kRelative;
  Index burn_in = 20;
  double relative_delta = 0.5;
  double perturbation_std = 0.1;
  double setpoint_halfwidth = 1.0;
  double primitive_amplitude = 1.0;
  unsigned threads = 1;
};

struct BenchSection {
  std::vector<BenchMethod> methods{BenchMethod::kDatamodel, BenchMethod::kL1, BenchMethod::kRandom};
  std::vector<Index> k_values{20, 50, 100};
  Index seeds = 10;
  Index t_sim = 40;
  ReferenceStrategy scenario = ReferenceStrategy::kRelative;
  bool record_step_time = true;
  double max_rel_gap = 1.0;
  unsigned threads = 1;
};

struct ExperimentConfig {
  PlantSection plant;
  HankelSection hankel;
  DeepcSection deepc;
  DatamodelSection datamodel;
  BenchSection bench;
  std::uint64_t seed = 20240601;
};

/// Parses JSON text on top of the defaults. Unknown keys, wrong types and
/// out-of-range values raise Error(kConfig) naming the offending key.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Every field, defaults included.
std::string dump_config(const ExperimentConfig& cfg);

/// Consistency checks that need the plant (dimensions of Q, R, noise).
void validate_config(const ExperimentConfig& cfg);

PlantModel build_plant(const ExperimentConfig& cfg);
DeepcConfig build_deepc(const ExperimentConfig& cfg, Index input_dim, Index output_dim);
ReferenceConfig build_reference(const ExperimentConfig& cfg, ReferenceStrategy strategy);
std::vector<std::uint64_t> bench_seeds(const ExperimentConfig& cfg);

}  // namespace deepsel::tools
