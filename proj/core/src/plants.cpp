#include "deepsel/plants.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "deepsel/errors.hpp"

namespace deepsel {
namespace {

template <typename F>
Vec rk4(const F& f, const Vec& x, const Vec& u, double dt, int substeps) {
  const double h = dt / substeps;
  Vec s = x;
  for (int i = 0; i < substeps; ++i) {
    const Vec k1 = f(s, u);
    const Vec k2 = f(s + 0.5 * h * k1, u);
    const Vec k3 = f(s + 0.5 * h * k2, u);
    const Vec k4 = f(s + h * k3, u);
    s += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return s;
}

double get(const PlantParams& p, const std::string& key) { return p.at(key); }

void require_positive(const PlantParams& p, std::initializer_list<const char*> keys) {
  for (const char* key : keys) {
    if (!(get(p, key) > 0.0)) {
      throw Error(ErrorKind::kInvalidParameter,
                  std::string("plant parameter '") + key + "' must be positive, got " +
                      std::to_string(get(p, key)));
    }
  }
}

void require_nonnegative(const PlantParams& p, std::initializer_list<const char*> keys) {
  for (const char* key : keys) {
    if (!(get(p, key) >= 0.0)) {
      throw Error(ErrorKind::kInvalidParameter,
                  std::string("plant parameter '") + key + "' must be non-negative");
    }
  }
}

int substeps_of(const PlantParams& p) {
  const double s = get(p, "substeps");
  if (s < 1.0 || s != std::floor(s)) {
    throw Error(ErrorKind::kInvalidParameter, "plant parameter 'substeps' must be a positive integer");
  }
  return static_cast<int>(s);
}

// x = (position, velocity); a lightly damped integrator chain, y = position.
class Lti2 final : public PlantDynamics {
 public:
  explicit Lti2(const PlantParams& p) {
    A_ = Mat{{1.0, get(p, "coupling")}, {0.0, get(p, "pole")}};
    B_ = Mat{{0.0}, {get(p, "gain")}};
    C_ = Mat{{1.0, 0.0}};
  }
  Vec step(const Vec& x, const Vec& u) const override { return A_ * x + B_ * u; }
  Vec observe(const Vec& x) const override { return C_ * x; }
  std::optional<LinearModel> linear_model() const override { return LinearModel{A_, B_, C_}; }

 private:
  Mat A_, B_, C_;
};

// I*theta'' = u - b*theta' - m*g*lc*sin(theta), point mass at the tip.
class Pendulum final : public PlantDynamics {
 public:
  explicit Pendulum(const PlantParams& p)
      : mass_(get(p, "mass")),
        length_(get(p, "length")),
        damping_(get(p, "damping")),
        gravity_(get(p, "gravity")),
        dt_(get(p, "dt")),
        substeps_(substeps_of(p)),
        full_output_(get(p, "outputs") == 3.0) {}

  Vec step(const Vec& x, const Vec& u) const override {
    return rk4([this](const Vec& s, const Vec& in) { return rhs(s, in); }, x, u, dt_, substeps_);
  }

  Vec observe(const Vec& x) const override {
    if (full_output_) return Vec{{std::sin(x(0)), std::cos(x(0)), x(1)}};
    return Vec{{x(0)}};
  }

  std::optional<double> energy(const Vec& x) const override {
    const double inertia = mass_ * length_ * length_;
    return 0.5 * inertia * x(1) * x(1) + mass_ * gravity_ * length_ * (1.0 - std::cos(x(0)));
  }

 private:
  Vec rhs(const Vec& s, const Vec& u) const {
    const double inertia = mass_ * length_ * length_;
    const double acc =
        (u(0) - damping_ * s(1) - mass_ * gravity_ * length_ * std::sin(s(0))) / inertia;
    return Vec{{s(1), acc}};
  }

  double mass_, length_, damping_, gravity_, dt_;
  int substeps_;
  bool full_output_;
};

// Planar two-link arm with uniform rods, no gravity, viscous joint friction.
// x = (q1, q2, dq1, dq2).
class Reacher2Link final : public PlantDynamics {
 public:
  explicit Reacher2Link(const PlantParams& p)
      : m1_(get(p, "mass1")),
        m2_(get(p, "mass2")),
        l1_(get(p, "length1")),
        l2_(get(p, "length2")),
        friction_(get(p, "friction")),
        dt_(get(p, "dt")),
        substeps_(substeps_of(p)) {}

  Vec step(const Vec& x, const Vec& u) const override {
    return rk4([this](const Vec& s, const Vec& in) { return rhs(s, in); }, x, u, dt_, substeps_);
  }

  Vec observe(const Vec& x) const override {
    const double q1 = x(0);
    const double q2 = x(1);
    Vec y(8);
    y << std::sin(q1), std::cos(q1), std::sin(q2), std::cos(q2),
        l1_ * std::cos(q1) + l2_ * std::cos(q1 + q2), l1_ * std::sin(q1) + l2_ * std::sin(q1 + q2),
        x(2), x(3);
    return y;
  }

  std::optional<double> energy(const Vec& x) const override {
    const Eigen::Vector2d qd = x.segment<2>(2);
    return 0.5 * qd.dot(mass_matrix(x(1)) * qd);
  }

 private:
  Eigen::Matrix2d mass_matrix(double q2) const {
    const double lc1 = 0.5 * l1_;
    const double lc2 = 0.5 * l2_;
    const double i1 = m1_ * l1_ * l1_ / 12.0;
    const double i2 = m2_ * l2_ * l2_ / 12.0;
    const double c2 = std::cos(q2);
    Eigen::Matrix2d M;
    M(0, 0) = i1 + i2 + m1_ * lc1 * lc1 + m2_ * (l1_ * l1_ + lc2 * lc2 + 2.0 * l1_ * lc2 * c2);
    M(0, 1) = i2 + m2_ * (lc2 * lc2 + l1_ * lc2 * c2);
    M(1, 0) = M(0, 1);
    M(1, 1) = i2 + m2_ * lc2 * lc2;
    return M;
  }

  Vec rhs(const Vec& s, const Vec& u) const {
    const double q2 = s(1);
    const double dq1 = s(2);
    const double dq2 = s(3);
    const double h = m2_ * l1_ * 0.5 * l2_ * std::sin(q2);
    Eigen::Vector2d bias;
    bias << -h * (2.0 * dq1 * dq2 + dq2 * dq2), h * dq1 * dq1;
    Eigen::Vector2d tau;
    tau << u(0) - friction_ * dq1, u(1) - friction_ * dq2;
    const Eigen::Vector2d qdd = mass_matrix(q2).ldlt().solve(tau - bias);
    return Vec{{dq1, dq2, qdd(0), qdd(1)}};
  }

  double m1_, m2_, l1_, l2_, friction_, dt_;
  int substeps_;
};

PlantParams merged(PlantKind kind, const PlantParams& overrides) {
  PlantParams p = default_plant_params(kind);
  for (const auto& [k, v] : overrides) {
    if (!p.contains(k)) {
      throw Error(ErrorKind::kInvalidParameter,
                  "unknown parameter '" + k + "' for plant " + std::string(to_string(kind)));
    }
    p[k] = v;
  }
  return p;
}

}  // namespace

PlantKind parse_plant_kind(std::string_view name) {
  if (name == "lti2") return PlantKind::kLti2;
  if (name == "pendulum") return PlantKind::kPendulum;
  if (name == "reacher2link") return PlantKind::kReacher2Link;
  throw Error(ErrorKind::kUnknownKind, "unknown plant kind '" + std::string(name) + "'");
}

std::string_view to_string(PlantKind kind) noexcept {
  switch (kind) {
    case PlantKind::kLti2: return "lti2";
    case PlantKind::kPendulum: return "pendulum";
    case PlantKind::kReacher2Link: return "reacher2link";
  }
  return "?";
}

PlantParams default_plant_params(PlantKind kind) {
  switch (kind) {
    case PlantKind::kLti2:
      return {{"coupling", 0.1}, {"pole", 0.9}, {"gain", 0.1}, {"dt", 0.02},
              {"u_max", 1.0},    {"reset_position", 1.0}, {"reset_velocity", 0.5}};
    case PlantKind::kPendulum:
      return {{"mass", 1.0},       {"length", 0.5},      {"damping", 0.1},
              {"gravity", 9.81},   {"dt", 0.02},         {"u_max", 1.0},
              {"substeps", 1.0},   {"outputs", 1.0},     {"reset_angle", 1.0},
              {"reset_rate", 1.0}};
    case PlantKind::kReacher2Link:
      return {{"mass1", 1.0},    {"mass2", 1.0},    {"length1", 0.5},
              {"length2", 0.5},  {"friction", 0.1}, {"dt", 0.02},
              {"u_max", 1.0},    {"substeps", 1.0}, {"reset_angle", std::numbers::pi},
              {"reset_rate", 0.5}};
  }
  throw Error(ErrorKind::kUnknownKind, "unknown plant kind");
}

PlantModel::PlantModel(PlantKind kind, PlantParams params,
                       std::shared_ptr<const PlantDynamics> dyn, Index state_dim,
                       Index input_dim, Index output_dim, double dt, Vec input_lower,
                       Vec input_upper, Vec reset_halfwidth)
    : kind_(kind),
      params_(std::move(params)),
      dyn_(std::move(dyn)),
      n_(state_dim),
      m_(input_dim),
      p_(output_dim),
      dt_(dt),
      lower_(std::move(input_lower)),
      upper_(std::move(input_upper)),
      reset_(std::move(reset_halfwidth)) {}

bool PlantModel::clamp_input(Vec& u) const {
  bool moved = false;
  for (Index i = 0; i < u.size(); ++i) {
    const double c = std::clamp(u(i), lower_(i), upper_(i));
    if (c != u(i)) {
      moved = true;
      u(i) = c;
    }
  }
  return moved;
}

PlantModel make_plant(PlantKind kind, const PlantParams& overrides) {
  const PlantParams p = merged(kind, overrides);
  require_positive(p, {"dt", "u_max"});
  const double u_max = get(p, "u_max");
  switch (kind) {
    case PlantKind::kLti2: {
      require_nonnegative(p, {"reset_position", "reset_velocity"});
      auto dyn = std::make_shared<const Lti2>(p);
      return PlantModel(kind, p, dyn, 2, 1, 1, get(p, "dt"), Vec::Constant(1, -u_max),
                        Vec::Constant(1, u_max),
                        Vec{{get(p, "reset_position"), get(p, "reset_velocity")}});
    }
    case PlantKind::kPendulum: {
      require_positive(p, {"mass", "length"});
      require_nonnegative(p, {"damping", "gravity", "reset_angle", "reset_rate"});
      const double outputs = get(p, "outputs");
      if (outputs != 1.0 && outputs != 3.0) {
        throw Error(ErrorKind::kInvalidParameter, "pendulum 'outputs' must be 1 or 3");
      }
      auto dyn = std::make_shared<const Pendulum>(p);
      return PlantModel(kind, p, dyn, 2, 1, static_cast<Index>(outputs), get(p, "dt"),
                        Vec::Constant(1, -u_max), Vec::Constant(1, u_max),
                        Vec{{get(p, "reset_angle"), get(p, "reset_rate")}});
    }
    case PlantKind::kReacher2Link: {
      require_positive(p, {"mass1", "mass2", "length1", "length2"});
      require_nonnegative(p, {"friction", "reset_angle", "reset_rate"});
      auto dyn = std::make_shared<const Reacher2Link>(p);
      const double a = get(p, "reset_angle");
      const double r = get(p, "reset_rate");
      return PlantModel(kind, p, dyn, 4, 2, 8, get(p, "dt"), Vec::Constant(2, -u_max),
                        Vec::Constant(2, u_max), Vec{{a, a, r, r}});
    }
  }
  throw Error(ErrorKind::kUnknownKind, "unknown plant kind");
}

RolloutResult simulate(const PlantModel& plant, const Vec& x0, const Mat& inputs,
                       const NoiseSpec& noise) {
  const Index m = plant.input_dim();
  const Index p = plant.output_dim();
  if (x0.size() != plant.state_dim()) {
    throw Error(ErrorKind::kDimensionMismatch, "initial state has dimension " +
                                                   std::to_string(x0.size()) + ", plant expects " +
                                                   std::to_string(plant.state_dim()));
  }
  if (inputs.cols() != m) {
    throw Error(ErrorKind::kDimensionMismatch, "input matrix has " +
                                                   std::to_string(inputs.cols()) +
                                                   " channels, plant expects " + std::to_string(m));
  }
  Vec stds = Vec::Zero(p);
  if (noise.output_noise_std.size() == 1) {
    stds.setConstant(noise.output_noise_std(0));
  } else if (noise.output_noise_std.size() == p) {
    stds = noise.output_noise_std;
  } else if (noise.output_noise_std.size() != 0) {
    throw Error(ErrorKind::kDimensionMismatch, "noise std must have 1 or p entries");
  }
  if ((stds.array() < 0.0).any()) {
    throw Error(ErrorKind::kInvalidParameter, "noise std must be non-negative");
  }
  const bool noisy = (stds.array() > 0.0).any();
  Rng rng(noise.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  const Index steps = inputs.rows();
  Mat u_rec(steps, m);
  Mat y_rec(steps, p);
  RolloutResult res;
  Vec x = x0;
  for (Index k = 0; k < steps; ++k) {
    if (!x.allFinite()) {
      throw NonFiniteStateError(static_cast<std::size_t>(k),
                                "non-finite plant state at step " + std::to_string(k));
    }
    Vec y = plant.observe(x);
    if (noisy) {
      for (Index i = 0; i < p; ++i) y(i) += stds(i) * normal(rng);
    }
    Vec u = inputs.row(k).transpose();
    if (plant.clamp_input(u)) ++res.clamped_steps;
    u_rec.row(k) = u.transpose();
    y_rec.row(k) = y.transpose();
    x = plant.step(x, u);
  }
  if (!x.allFinite()) {
    throw NonFiniteStateError(static_cast<std::size_t>(steps),
                              "non-finite plant state at step " + std::to_string(steps));
  }
  res.traj = Trajectory(std::move(u_rec), std::move(y_rec), plant.dt());
  res.final_state = std::move(x);
  return res;
}

Mat random_inputs(const PlantModel& plant, Index steps, double amplitude, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Index m = plant.input_dim();
  Mat u(steps, m);
  for (Index k = 0; k < steps; ++k) {
    for (Index i = 0; i < m; ++i) {
      const double lo = plant.input_lower()(i);
      const double hi = plant.input_upper()(i);
      const double mid = 0.5 * (lo + hi);
      u(k, i) = mid + amplitude * (lo - mid + unit(rng) * (hi - lo));
    }
  }
  return u;
}

Vec random_reset(const PlantModel& plant, double scale, Rng& rng) {
  std::uniform_real_distribution<double> sym(-1.0, 1.0);
  const Vec& hw = plant.reset_halfwidth();
  Vec x(hw.size());
  for (Index i = 0; i < hw.size(); ++i) x(i) = scale * hw(i) * sym(rng);
  return x;
}

}  // namespace deepsel
