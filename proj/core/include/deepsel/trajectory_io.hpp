#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "deepsel/trajectory.hpp"

namespace deepsel {

/// Sidecar metadata stored next to a trajectory CSV as key=value lines.
struct TrajectoryMeta {
  Index input_dim = 0;
  Index output_dim = 0;
  double dt = 0.0;
  std::uint64_t seed = 0;
  /// Reset state the rollout started from; lets archived windows be replayed.
  Vec initial_state;
  std::map<std::string, std::string> extra;
};

/// Header `k,u_0..u_{m-1},y_0..y_{p-1}`, values printed round-trip exact.
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj);
Trajectory read_trajectory_csv(const std::filesystem::path& path, double dt);

void write_trajectory_meta(const std::filesystem::path& path, const TrajectoryMeta& meta);
TrajectoryMeta read_trajectory_meta(const std::filesystem::path& path);

/// Trajectory plus the metadata needed to reproduce it.
struct ArchivedTrajectory {
  Trajectory traj;
  TrajectoryMeta meta;
};

/// Loads every `*.csv` in `dir` with its `.meta` sidecar, sorted by filename.
std::vector<ArchivedTrajectory> load_trajectory_dir(const std::filesystem::path& dir);

/// Shortest decimal that round-trips the double exactly.
std::string format_double(double value);

}  // namespace deepsel
