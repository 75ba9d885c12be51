#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "deepsel/rng.hpp"
#include "deepsel/trajectory.hpp"
#include "deepsel/types.hpp"

namespace deepsel {

enum class PlantKind { kLti2, kPendulum, kReacher2Link };

PlantKind parse_plant_kind(std::string_view name);
std::string_view to_string(PlantKind kind) noexcept;

using PlantParams = std::map<std::string, double>;

/// Known (A, B, C) of a linear plant, for model-based oracles.
struct LinearModel {
  Mat A;
  Mat B;
  Mat C;
};

/// Implementation interface behind PlantModel.
class PlantDynamics {
 public:
  virtual ~PlantDynamics() = default;
  [[nodiscard]] virtual Vec step(const Vec& x, const Vec& u) const = 0;
  [[nodiscard]] virtual Vec observe(const Vec& x) const = 0;
  [[nodiscard]] virtual std::optional<LinearModel> linear_model() const { return std::nullopt; }
  [[nodiscard]] virtual std::optional<double> energy(const Vec&) const { return std::nullopt; }
};

/// Immutable plant handle; cheap to copy and safe to share across threads.
class PlantModel {
 public:
  PlantModel(PlantKind kind, PlantParams params, std::shared_ptr<const PlantDynamics> dyn,
             Index state_dim, Index input_dim, Index output_dim, double dt, Vec input_lower,
             Vec input_upper, Vec reset_halfwidth);

  [[nodiscard]] Vec step(const Vec& x, const Vec& u) const { return dyn_->step(x, u); }
  [[nodiscard]] Vec observe(const Vec& x) const { return dyn_->observe(x); }

  [[nodiscard]] PlantKind kind() const noexcept { return kind_; }
  [[nodiscard]] const PlantParams& params() const noexcept { return params_; }
  [[nodiscard]] Index state_dim() const noexcept { return n_; }
  [[nodiscard]] Index input_dim() const noexcept { return m_; }
  [[nodiscard]] Index output_dim() const noexcept { return p_; }
  [[nodiscard]] double dt() const noexcept { return dt_; }
  [[nodiscard]] const Vec& input_lower() const noexcept { return lower_; }
  [[nodiscard]] const Vec& input_upper() const noexcept { return upper_; }
  /// Half-widths of the uniform box that random resets are drawn from.
  [[nodiscard]] const Vec& reset_halfwidth() const noexcept { return reset_; }

  [[nodiscard]] std::optional<LinearModel> linear_model() const { return dyn_->linear_model(); }
  /// Total mechanical energy, for mechanical plants.
  [[nodiscard]] std::optional<double> energy(const Vec& x) const { return dyn_->energy(x); }

  /// Clamps u into the input box; returns true if any channel moved.
  bool clamp_input(Vec& u) const;

 private:
  PlantKind kind_;
  PlantParams params_;
  std::shared_ptr<const PlantDynamics> dyn_;
  Index n_;
  Index m_;
  Index p_;
  double dt_;
  Vec lower_;
  Vec upper_;
  Vec reset_;
};

/// Builds a plant. Missing params take their defaults; unknown keys and
/// non-positive physical quantities raise Error.
PlantModel make_plant(PlantKind kind, const PlantParams& params = {});

/// Full parameter set (defaults merged with overrides) for a plant kind.
PlantParams default_plant_params(PlantKind kind);

struct NoiseSpec {
  /// Per-channel output noise std; a single entry broadcasts, empty means none.
  Vec output_noise_std;
  std::uint64_t seed = 0;
};

struct RolloutResult {
  Trajectory traj;
  /// State after the last input has been applied.
  Vec final_state;
  std::size_t clamped_steps = 0;
};

/// Simulates y_k = observe(x_k) + noise, x_{k+1} = step(x_k, u_k) for each
/// input row. Inputs outside the plant box are clamped and counted.
RolloutResult simulate(const PlantModel& plant, const Vec& x0, const Mat& inputs,
                       const NoiseSpec& noise = {});

inline Trajectory rollout(const PlantModel& plant, const Vec& x0, const Mat& inputs,
                          const NoiseSpec& noise = {}) {
  return simulate(plant, x0, inputs, noise).traj;
}

/// IID uniform inputs scaled into amplitude * [lower, upper].
Mat random_inputs(const PlantModel& plant, Index steps, double amplitude, Rng& rng);

/// Uniform draw from the plant's reset box scaled by `scale`.
Vec random_reset(const PlantModel& plant, double scale, Rng& rng);

}  // namespace deepsel
