#include <doctest.h>

#include <cmath>
#include <limits>

#include "deepsel/errors.hpp"
#include "deepsel/plants.hpp"
#include "deepsel/solver.hpp"
#include "test_util.hpp"

using namespace deepsel;

namespace {

struct Problem {
  HankelSet h;
  Vec u_ini, y_ini, r;
};

Problem lti2_problem(Index t_ini, Index horizon, Index trajs, Index length, std::uint64_t seed) {
  const PlantModel plant = make_plant(PlantKind::kLti2);
  const auto data = test::collect(plant, trajs, length, seed);
  Problem pr{build_hankel(data, t_ini, horizon), {}, {}, {}};
  Rng rng(seed + 1);
  const Trajectory probe =
      rollout(plant, random_reset(plant, 1.0, rng), random_inputs(plant, t_ini, 1.0, rng));
  pr.u_ini = probe.inputs().reshaped<Eigen::RowMajor>();
  pr.y_ini = probe.outputs().reshaped<Eigen::RowMajor>();
  pr.r = Vec::Constant(horizon, 0.3);
  return pr;
}

/// Quadratic form g^T H g + 2 f^T g of the DeePC objective, built from Q and R
/// directly rather than from their square roots.
struct Qp {
  Mat H;
  Vec f;
  double c = 0.0;
};

Qp dense_qp(const Problem& pr, const DeepcConfig& cfg) {
  const HankelSet& h = pr.h;
  const Index m = h.input_dim, p = h.output_dim, n = h.columns();
  Qp qp{Mat::Zero(n, n), Vec::Zero(n), 0.0};
  for (Index k = 0; k < h.horizon; ++k) {
    const Mat yk = h.Yf.middleRows(k * p, p);
    const Mat uk = h.Uf.middleRows(k * m, m);
    const Vec rk = pr.r.segment(k * p, p);
    qp.H += yk.transpose() * cfg.Q * yk + uk.transpose() * cfg.R * uk;
    qp.f -= yk.transpose() * cfg.Q * rk;
    qp.c += rk.dot(cfg.Q * rk);
  }
  qp.H += cfg.lambda_g * Mat::Identity(n, n);
  if (cfg.lambda_y > 0.0) {
    qp.H += cfg.lambda_y * h.Yp.transpose() * h.Yp;
    qp.f -= cfg.lambda_y * h.Yp.transpose() * pr.y_ini;
    qp.c += cfg.lambda_y * pr.y_ini.squaredNorm();
  }
  return qp;
}

/// Equality-constrained minimiser via the dense KKT system.
Vec kkt_solve(const Qp& qp, const Mat& A, const Vec& b) {
  const Index n = qp.H.rows(), k = A.rows();
  Mat K = Mat::Zero(n + k, n + k);
  K.topLeftCorner(n, n) = qp.H;
  K.topRightCorner(n, k) = A.transpose();
  K.bottomLeftCorner(k, n) = A;
  Vec rhs(n + k);
  rhs << -qp.f, b;
  return K.fullPivLu().solve(rhs).head(n);
}

double qp_value(const Qp& qp, const Vec& g) { return g.dot(qp.H * g) + 2.0 * qp.f.dot(g) + qp.c; }

}  // namespace

TEST_CASE("unconstrained DeePC matches a dense KKT solve") {
  const Problem pr = lti2_problem(3, 5, 3, 40, 21);
  for (double lambda_g : {1e-3, 0.5, 10.0}) {
    for (double lambda_y : {1.0, 1e3}) {
      DeepcConfig cfg = DeepcConfig::identity(1, 1, 0.2);
      cfg.Q(0, 0) = 2.0;
      cfg.lambda_g = lambda_g;
      cfg.lambda_y = lambda_y;
      const DeepcSolution sol = solve_deepc(pr.h, pr.u_ini, pr.y_ini, pr.r, cfg);
      const Qp qp = dense_qp(pr, cfg);
      const Vec g_ref = kkt_solve(qp, pr.h.Up, pr.u_ini);
      CHECK(sol.status == SolveStatus::kOptimal);
      CHECK((sol.g - g_ref).norm() <= 1e-7 * (1.0 + g_ref.norm()));
      CHECK(sol.objective == doctest::Approx(qp_value(qp, g_ref)).epsilon(1e-8));
      CHECK(sol.primal_residual < 1e-10);
      CHECK(sol.stationarity_residual < 1e-8);
    }
  }
}

TEST_CASE("without slack the past outputs become a hard constraint") {
  const Problem pr = lti2_problem(3, 5, 3, 40, 5);
  DeepcConfig cfg = DeepcConfig::identity(1, 1, 0.1);
  cfg.lambda_y = 0.0;
  cfg.lambda_g = 0.1;
  const DeepcSolution sol = solve_deepc(pr.h, pr.u_ini, pr.y_ini, pr.r, cfg);
  CHECK(sol.status == SolveStatus::kOptimal);
  CHECK((pr.h.Up * sol.g - pr.u_ini).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((pr.h.Yp * sol.g - pr.y_ini).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(sol.sigma_y.norm() == 0.0);
  Mat A(pr.h.Up.rows() + pr.h.Yp.rows(), pr.h.columns());
  A << pr.h.Up, pr.h.Yp;
  Vec b(A.rows());
  b << pr.u_ini, pr.y_ini;
  const Vec g_ref = kkt_solve(dense_qp(pr, cfg), A, b);
  CHECK((sol.g - g_ref).norm() <= 1e-7 * (1.0 + g_ref.norm()));
}

TEST_CASE("zero lambda_g returns the minimum-norm minimiser") {
  const Problem pr = lti2_problem(2, 3, 2, 40, 8);
  DeepcConfig cfg = DeepcConfig::identity(1, 1, 0.1);
  cfg.lambda_g = 0.0;
  cfg.lambda_y = 0.0;
  const DeepcSolution sol = solve_deepc(pr.h, pr.u_ini, pr.y_ini, pr.r, cfg);
  CHECK(sol.status == SolveStatus::kOptimal);
  Mat stacked(pr.h.Up.rows() + pr.h.Yp.rows() + pr.h.Uf.rows() + pr.h.Yf.rows(), pr.h.columns());
  stacked << pr.h.Up, pr.h.Yp, pr.h.Uf, pr.h.Yf;
  const Mat kernel = stacked.fullPivLu().kernel();
  REQUIRE(kernel.cols() > 0);
  CHECK((kernel.transpose() * sol.g).cwiseAbs().maxCoeff() < 1e-8 * (1.0 + sol.g.norm()));
}

TEST_CASE("DeePC prediction reproduces the true lti2 response") {
  const PlantModel plant = make_plant(PlantKind::kLti2, {{"u_max", 1e3}});
  const auto data = test::collect(plant, 4, 60, 33);
  const Index t_ini = 4, horizon = 10;
  const HankelSet h = build_hankel(data, t_ini, horizon);
  Rng rng(34);
  const Vec x0 = random_reset(plant, 1.0, rng);
  const RolloutResult past = simulate(plant, x0, random_inputs(plant, t_ini, 1.0, rng));
  const Vec u_ini = past.traj.inputs().reshaped<Eigen::RowMajor>();
  const Vec y_ini = past.traj.outputs().reshaped<Eigen::RowMajor>();
  DeepcConfig cfg = DeepcConfig::identity(1, 1, 0.1);
  cfg.lambda_g = 1e-8;
  cfg.lambda_y = 1e8;
  const DeepcSolution sol = solve_deepc(h, u_ini, y_ini, Vec::Constant(horizon, 0.5), cfg);
  const RolloutResult future = simulate(plant, past.final_state, sol.u_f);
  REQUIRE(future.clamped_steps == 0);
  CHECK((future.traj.outputs() - sol.y_f).cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("too few columns for the equality block is infeasible") {
  const Problem pr = lti2_problem(4, 3, 1, 30, 2);
  DeepcConfig cfg = DeepcConfig::identity(1, 1, 0.1);
  const HankelSet few = extract_columns(pr.h, ColumnSubset({0, 5, 9}, pr.h.columns()));
  CHECK(solve_deepc(few, pr.u_ini, pr.y_ini, pr.r, cfg).status == SolveStatus::kInfeasible);
  cfg.lambda_y = 0.0;
  const HankelSet seven =
      extract_columns(pr.h, ColumnSubset({0, 2, 4, 6, 8, 10, 12}, pr.h.columns()));
  CHECK(solve_deepc(seven, pr.u_ini, pr.y_ini, pr.r, cfg).status == SolveStatus::kInfeasible);
}

TEST_CASE("input box constraints match active-set enumeration") {
  const Problem pr = lti2_problem(2, 3, 3, 30, 41);
  DeepcConfig cfg = DeepcConfig::identity(1, 1, 0.05);
  cfg.lambda_g = 0.1;
  cfg.lambda_y = 10.0;
  const DeepcSolution free_sol = solve_deepc(pr.h, pr.u_ini, pr.y_ini, pr.r, cfg);
  const double bound = 0.5 * free_sol.u_f.cwiseAbs().maxCoeff();
  REQUIRE(bound > 1e-3);
  cfg.u_box = ChannelBox{Vec::Constant(1, -bound), Vec::Constant(1, bound)};
  cfg.admm_tol = 1e-10;
  cfg.admm_max_iter = 200000;
  const DeepcSolution sol = solve_deepc(pr.h, pr.u_ini, pr.y_ini, pr.r, cfg);
  CHECK(sol.status == SolveStatus::kOptimal);

  const Qp qp = dense_qp(pr, cfg);
  const Index n_h = pr.h.horizon;
  double best = std::numeric_limits<double>::infinity();
  int combos = 1;
  for (Index k = 0; k < n_h; ++k) combos *= 3;
  for (int code = 0; code < combos; ++code) {
    std::vector<int> state(static_cast<std::size_t>(n_h));
    int c = code;
    Index active = 0;
    for (Index k = 0; k < n_h; ++k) {
      state[static_cast<std::size_t>(k)] = c % 3;
      c /= 3;
      active += state[static_cast<std::size_t>(k)] != 0;
    }
    Mat A(pr.h.Up.rows() + active, pr.h.columns());
    Vec b(A.rows());
    A.topRows(pr.h.Up.rows()) = pr.h.Up;
    b.head(pr.h.Up.rows()) = pr.u_ini;
    Index row = pr.h.Up.rows();
    for (Index k = 0; k < n_h; ++k) {
      const int s = state[static_cast<std::size_t>(k)];
      if (s == 0) continue;
      A.row(row) = pr.h.Uf.row(k);
      b(row) = s == 1 ? -bound : bound;
      ++row;
    }
    const Vec g = kkt_solve(qp, A, b);
    if ((A * g - b).cwiseAbs().maxCoeff() > 1e-9) continue;
    const Vec uf = pr.h.Uf * g;
    if (uf.cwiseAbs().maxCoeff() > bound + 1e-9) continue;
    best = std::min(best, qp_value(qp, g));
  }
  REQUIRE(std::isfinite(best));
  CHECK(sol.u_f.cwiseAbs().maxCoeff() <= bound + 1e-6);
  CHECK(sol.objective == doctest::Approx(best).epsilon(1e-5));
}

TEST_CASE("a loose box leaves the solution unchanged") {
  const Problem pr = lti2_problem(2, 4, 3, 30, 43);
  DeepcConfig cfg = DeepcConfig::identity(1, 1, 0.1);
  const DeepcSolution free_sol = solve_deepc(pr.h, pr.u_ini, pr.y_ini, pr.r, cfg);
  cfg.u_box = ChannelBox{Vec::Constant(1, -1e6), Vec::Constant(1, 1e6)};
  cfg.y_box = ChannelBox{Vec::Constant(1, -1e6), Vec::Constant(1, 1e6)};
  cfg.admm_tol = 1e-10;
  cfg.admm_max_iter = 100000;
  const DeepcSolution boxed = solve_deepc(pr.h, pr.u_ini, pr.y_ini, pr.r, cfg);
  CHECK((boxed.u_f - free_sol.u_f).cwiseAbs().maxCoeff() < 1e-6);
  CHECK(boxed.objective == doctest::Approx(free_sol.objective).epsilon(1e-6));
}

TEST_CASE("soft output bounds pull predictions toward the box") {
  const Problem pr = lti2_problem(2, 4, 3, 30, 47);
  DeepcConfig cfg = DeepcConfig::identity(1, 1, 0.01);
  const Vec high = Vec::Constant(4, 2.0);
  const DeepcSolution free_sol = solve_deepc(pr.h, pr.u_ini, pr.y_ini, high, cfg);
  // lti2 has relative degree two: the first two predictions are fixed by the state.
  const double cap = 0.5 * free_sol.y_f.bottomRows(2).maxCoeff();
  cfg.y_box = ChannelBox{Vec::Constant(1, -10.0), Vec::Constant(1, cap)};
  cfg.y_box_weight = 1e4;
  cfg.admm_rho = 100.0;
  cfg.admm_max_iter = 20000;
  const DeepcSolution sol = solve_deepc(pr.h, pr.u_ini, pr.y_ini, high, cfg);
  CHECK(sol.status == SolveStatus::kOptimal);
  CHECK(sol.y_f.bottomRows(2).maxCoeff() <= cap + 1e-3);
  CHECK(sol.y_f.bottomRows(2).maxCoeff() < free_sol.y_f.bottomRows(2).maxCoeff());
  cfg.admm_rho = 10.0;
  cfg.admm_max_iter = 200000;
  const DeepcSolution other_rho = solve_deepc(pr.h, pr.u_ini, pr.y_ini, high, cfg);
  CHECK(other_rho.objective == doctest::Approx(sol.objective).epsilon(1e-5));
}

TEST_CASE("re-solving is bit-identical and nested columns never raise the objective") {
  const Problem pr = lti2_problem(2, 4, 4, 40, 61);
  const DeepcConfig cfg = DeepcConfig::identity(1, 1, 0.1);
  const DeepcSolution a = solve_deepc(pr.h, pr.u_ini, pr.y_ini, pr.r, cfg);
  const DeepcSolution b = solve_deepc(pr.h, pr.u_ini, pr.y_ini, pr.r, cfg);
  CHECK(a.g == b.g);
  std::mt19937_64 rng(62);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Index> big;
    for (Index j = 0; j < pr.h.columns(); ++j) {
      if (std::bernoulli_distribution(0.5)(rng)) big.push_back(j);
    }
    std::vector<Index> small;
    for (Index j : big) {
      if (std::bernoulli_distribution(0.6)(rng)) small.push_back(j);
    }
    if (static_cast<Index>(small.size()) < 6) continue;
    const auto hs = extract_columns(pr.h, ColumnSubset(small, pr.h.columns()));
    const auto hb = extract_columns(pr.h, ColumnSubset(big, pr.h.columns()));
    const double js = solve_deepc(hs, pr.u_ini, pr.y_ini, pr.r, cfg).objective;
    const double jb = solve_deepc(hb, pr.u_ini, pr.y_ini, pr.r, cfg).objective;
    CHECK(jb <= js * (1.0 + 1e-9) + 1e-12);
  }
}

TEST_CASE("exact data column as reference leaves only the input cost") {
  const Problem pr = lti2_problem(2, 4, 2, 30, 71);
  const Index j = 7;
  DeepcConfig cfg = DeepcConfig::identity(1, 1, 0.0);
  cfg.lambda_g = 0.0;
  cfg.lambda_y = 0.0;
  const Vec r = pr.h.Yf.col(j);
  const DeepcSolution sol = solve_deepc(pr.h, pr.h.Up.col(j), pr.h.Yp.col(j), r, cfg);
  CHECK((pr.h.Yf * sol.g - r).cwiseAbs().maxCoeff() < 1e-8);
  CHECK(sol.objective < 1e-12);
}

TEST_CASE("warm start reuses the ADMM state") {
  const Problem pr = lti2_problem(2, 4, 3, 40, 51);
  DeepcConfig cfg = DeepcConfig::identity(1, 1, 0.05);
  const DeepcSolution free_sol = solve_deepc(pr.h, pr.u_ini, pr.y_ini, pr.r, cfg);
  const double bound = 0.5 * free_sol.u_f.cwiseAbs().maxCoeff();
  cfg.u_box = ChannelBox{Vec::Constant(1, -bound), Vec::Constant(1, bound)};
  DeepcWorkspace ws;
  const DeepcSolution cold = solve_deepc(pr.h, pr.u_ini, pr.y_ini, pr.r, cfg, &ws);
  const DeepcSolution warm = solve_deepc(pr.h, pr.u_ini, pr.y_ini, pr.r, cfg, &ws);
  CHECK(ws.z.size() == pr.h.horizon);
  CHECK(warm.iterations < cold.iterations);
  CHECK((warm.u_f - cold.u_f).cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("config validation") {
  DeepcConfig cfg = DeepcConfig::identity(1, 2, 0.1);
  CHECK_NOTHROW(validate(cfg, 1, 2));
  CHECK_THROWS_AS(validate(cfg, 2, 2), Error);
  cfg.lambda_g = -1.0;
  CHECK_THROWS_AS(validate(cfg, 1, 2), Error);
  cfg = DeepcConfig::identity(1, 2, 0.1);
  cfg.Q(0, 1) = 5.0;
  cfg.Q(1, 0) = 5.0;
  CHECK_THROWS_AS(validate(cfg, 1, 2), Error);
  cfg = DeepcConfig::identity(1, 2, 0.1);
  cfg.Q(0, 1) = 0.1;
  CHECK_THROWS_AS(validate(cfg, 1, 2), Error);
  cfg = DeepcConfig::identity(1, 2, 0.1);
  cfg.u_box = ChannelBox{Vec::Constant(1, 1.0), Vec::Constant(1, -1.0)};
  CHECK_THROWS_AS(validate(cfg, 1, 2), Error);
}

TEST_CASE("solve_deepc rejects mismatched context sizes") {
  const Problem pr = lti2_problem(2, 3, 2, 20, 3);
  const DeepcConfig cfg = DeepcConfig::identity(1, 1, 0.1);
  CHECK_THROWS_AS(solve_deepc(pr.h, Vec::Zero(3), pr.y_ini, pr.r, cfg), Error);
  CHECK_THROWS_AS(solve_deepc(pr.h, pr.u_ini, pr.y_ini, Vec::Zero(2), cfg), Error);
}

TEST_CASE("psd_sqrt squares back") {
  std::mt19937_64 rng(6);
  const Mat a = test::random_mat(4, 4, rng);
  const Mat w = a.transpose() * a;
  const Mat s = psd_sqrt(w);
  CHECK((s.transpose() * s - w).cwiseAbs().maxCoeff() < 1e-10);
  const Mat d = Vec{{4.0, 0.0, 9.0}}.asDiagonal();
  CHECK((psd_sqrt(d) - Mat(Vec{{2.0, 0.0, 3.0}}.asDiagonal())).norm() == 0.0);
}

TEST_CASE("solve time probe returns one median per column count") {
  const auto t = solve_time_probe({20, 40}, 3);
  REQUIRE(t.size() == 2);
  CHECK(t[0].columns == 20);
  CHECK(t[1].columns == 40);
  CHECK(t[0].median_seconds > 0.0);
}
