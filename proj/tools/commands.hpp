#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "config.hpp"

namespace deepsel::tools {

struct CommandOptions {
  bool force = false;  ///< overwrite existing outputs
  std::ostream* out = nullptr;  ///< human-readable summary; null silences it
};

/// Exit codes beyond 0 returned by commands (errors are thrown).
inline constexpr int kExitPartialFailure = 3;

/// Random-input rollouts written as traj_NNN.csv with .meta sidecars.
int cmd_collect(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                const CommandOptions& opts);

/// One dataset for inclusion probability `alpha`.
int cmd_gendata(const ExperimentConfig& cfg, const std::filesystem::path& traj_dir,
                const std::filesystem::path& out_file, double alpha, const CommandOptions& opts);

/// One model per dataset, written to out_dir/model_a<alpha>.json.
int cmd_train(const ExperimentConfig& cfg, const std::vector<std::filesystem::path>& datasets,
              const std::filesystem::path& out_dir, const CommandOptions& opts);

/// Runs the grid; writes out_csv plus .tsv aggregate and .dat curves beside it.
/// Returns kExitPartialFailure when any cell aborted.
int cmd_bench(const ExperimentConfig& cfg, const std::filesystem::path& traj_dir,
              const std::optional<std::filesystem::path>& model_dir,
              const std::filesystem::path& out_csv, const CommandOptions& opts);

int cmd_report(const std::filesystem::path& results_csv, std::ostream& out);

int cmd_config(const std::filesystem::path& out_file, const CommandOptions& opts);

/// Hankel data for the configured (T_ini, N) from a trajectory directory.
HankelSet load_hankel(const ExperimentConfig& cfg, const std::filesystem::path& traj_dir);

std::filesystem::path dataset_name(double alpha);
std::filesystem::path model_name(double alpha);

}  // namespace deepsel::tools
