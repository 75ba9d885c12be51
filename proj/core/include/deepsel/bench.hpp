#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "deepsel/context_net.hpp"
#include "deepsel/datamodel.hpp"
#include "deepsel/plants.hpp"
#include "deepsel/selection.hpp"
#include "deepsel/solver.hpp"
#include "deepsel/trajectory.hpp"

namespace deepsel {

/// How the controller picks columns at each step.
struct SelectionPolicy {
  enum class Kind {
    kFull,       ///< all columns, no extraction (standard DeePC)
    kFixed,      ///< one subset for the whole run
    kDatamodel,  ///< g_phi(context) -> rule (top-K, threshold or budget)
    kL1,         ///< L1-nearest past windows
    kRandom,     ///< uniform K-subset redrawn every step
  };
  Kind kind = Kind::kFull;
  SelectionRule rule;  ///< K and budget; rule.kind matters for kDatamodel
  ColumnSubset fixed;
  const ContextNet* net = nullptr;
  std::uint64_t seed = 0;
  /// Threshold/budget picks smaller than m*T_ini fall back to top-K with
  /// this K.
  Index fallback_k = 0;

  static SelectionPolicy full() { return {}; }
  static SelectionPolicy fixed_subset(ColumnSubset s);
  static SelectionPolicy datamodel_topk(const ContextNet& net, Index k);
  static SelectionPolicy l1(Index k);
  static SelectionPolicy random(Index k, std::uint64_t seed);
};

struct ClosedLoopResult {
  Mat u;  ///< T_sim x m applied inputs
  Mat y;  ///< T_sim x p measured outputs
  Mat r;  ///< T_sim x p reference r_t
  std::vector<SolveStatus> status;
  std::vector<Index> subset_size;
  std::vector<double> step_seconds;
  double cost = 0.0;
  double iae = 0.0;
  double ise = 0.0;
  Index infeasible_steps = 0;
  Index steps_completed = 0;
  bool aborted = false;
  std::string abort_reason;
  Vec final_state;
};

struct Metrics {
  double cost = 0.0;
  double iae = 0.0;
  double ise = 0.0;
};

/// cost = sum_t |y_t - r_t|_Q^2 + |u_t|_R^2, IAE = sum |y_t - r_t|_1,
/// ISE = sum |y_t - r_t|^2 over the rows given.
Metrics compute_metrics(const Mat& u, const Mat& y, const Mat& r, const Mat& Q, const Mat& R);
Metrics compute_metrics(const ClosedLoopResult& res, const Mat& Q, const Mat& R);

struct ClosedLoopOptions {
  bool record_time = true;
  /// Measurement noise applied to y_t, seeded per run.
  NoiseSpec noise;
};

/// Receding-horizon DeePC from `state0`, whose last T_ini measured steps are
/// (u_ini, y_ini). `ref_track` stacks r_0..r_{T_sim+N-2} (p entries each);
/// shorter tracks are extended with their last value. An infeasible solve
/// holds the previous input; a non-finite state ends the run early.
ClosedLoopResult run_closed_loop(const PlantModel& plant, const Vec& state0, const Vec& u_ini,
                                 const Vec& y_ini, const HankelSet& h,
                                 const SelectionPolicy& policy, const Vec& ref_track,
                                 const DeepcConfig& cfg, Index t_sim,
                                 const ClosedLoopOptions& opts = {});

/// Stacked track of `steps` references, holding the last given value.
Vec extend_reference(const Vec& r, Index output_dim, Index steps);

/// Models keyed by training alpha.
class ModelRegistry {
 public:
  void add(ContextNet net);
  [[nodiscard]] bool empty() const noexcept { return models_.empty(); }
  [[nodiscard]] std::size_t size() const noexcept { return models_.size(); }
  [[nodiscard]] const std::map<double, ContextNet>& models() const noexcept { return models_; }

  /// The model whose alpha * M is closest to K, lower alpha on ties.
  [[nodiscard]] const ContextNet& select_for(Index k) const;
  /// Same, but fails when |alpha M - K| / K exceeds max_rel_gap.
  [[nodiscard]] const ContextNet& select_for(Index k, double max_rel_gap) const;

  static ModelRegistry load_dir(const std::filesystem::path& dir);

 private:
  std::map<double, ContextNet> models_;
};

enum class BenchMethod { kDatamodel, kL1, kRandom, kFull };

BenchMethod parse_bench_method(std::string_view name);
std::string_view to_string(BenchMethod m) noexcept;

}  // namespace deepsel
