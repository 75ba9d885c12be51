#include "deepsel/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

#include "deepsel/errors.hpp"
#include "deepsel/plants.hpp"
#include "deepsel/rng.hpp"

namespace deepsel {
namespace {

double inf_norm(const Vec& v) { return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>(); }

bool is_symmetric_psd(const Mat& w) {
  if (w.rows() != w.cols()) return false;
  if (!w.allFinite()) return false;
  const double scale = std::max(1.0, w.cwiseAbs().maxCoeff());
  if ((w - w.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) return false;
  Eigen::SelfAdjointEigenSolver<Mat> es(w, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() >= -1e-12 * scale;
}

/// Rows of the weighted least-squares residual D g - d.
struct WeightedData {
  Mat D;
  Vec d;
};

WeightedData weighted_data(const HankelSet& h, const Vec& y_ini, const Vec& r,
                           const DeepcConfig& cfg, bool slack) {
  const Index m = h.input_dim;
  const Index p = h.output_dim;
  const Index n_h = h.horizon;
  const Index cols = h.columns();
  const Mat qs = psd_sqrt(cfg.Q);
  const Mat rs = psd_sqrt(cfg.R);
  const Index rows = n_h * p + n_h * m + (slack ? h.Yp.rows() : 0);
  WeightedData wd{Mat(rows, cols), Vec(rows)};
  for (Index k = 0; k < n_h; ++k) {
    wd.D.middleRows(k * p, p).noalias() = qs * h.Yf.middleRows(k * p, p);
    wd.d.segment(k * p, p).noalias() = qs * r.segment(k * p, p);
  }
  const Index off_u = n_h * p;
  for (Index k = 0; k < n_h; ++k) {
    wd.D.middleRows(off_u + k * m, m).noalias() = rs * h.Uf.middleRows(k * m, m);
  }
  wd.d.segment(off_u, n_h * m).setZero();
  if (slack) {
    const double s = std::sqrt(cfg.lambda_y);
    const Index off_y = off_u + n_h * m;
    wd.D.middleRows(off_y, h.Yp.rows()) = s * h.Yp;
    wd.d.segment(off_y, h.Yp.rows()) = s * y_ini;
  }
  return wd;
}

double soft_box_prox(double v, double lo, double hi, double weight, double rho) {
  if (v > hi) return (2.0 * weight * hi + rho * v) / (2.0 * weight + rho);
  if (v < lo) return (2.0 * weight * lo + rho * v) / (2.0 * weight + rho);
  return v;
}

double box_violation_sq(const Mat& y, const ChannelBox& box) {
  double acc = 0.0;
  for (Index k = 0; k < y.rows(); ++k) {
    for (Index i = 0; i < y.cols(); ++i) {
      const double over = std::max(0.0, y(k, i) - box.upper(i));
      const double under = std::max(0.0, box.lower(i) - y(k, i));
      acc += over * over + under * under;
    }
  }
  return acc;
}

Mat as_rows(const Vec& stacked, Index steps, Index dim) {
  Mat out(steps, dim);
  for (Index k = 0; k < steps; ++k) out.row(k) = stacked.segment(k * dim, dim).transpose();
  return out;
}

}  // namespace

DeepcConfig DeepcConfig::identity(Index input_dim, Index output_dim, double r_weight) {
  DeepcConfig cfg;
  cfg.Q = Mat::Identity(output_dim, output_dim);
  cfg.R = r_weight * Mat::Identity(input_dim, input_dim);
  return cfg;
}

void validate(const DeepcConfig& cfg, Index input_dim, Index output_dim) {
  if (cfg.Q.rows() != output_dim || cfg.Q.cols() != output_dim) {
    throw Error(ErrorKind::kDimensionMismatch, "Q must be " + std::to_string(output_dim) + "x" +
                                                   std::to_string(output_dim));
  }
  if (cfg.R.rows() != input_dim || cfg.R.cols() != input_dim) {
    throw Error(ErrorKind::kDimensionMismatch,
                "R must be " + std::to_string(input_dim) + "x" + std::to_string(input_dim));
  }
  if (!is_symmetric_psd(cfg.Q)) throw Error(ErrorKind::kInvalidParameter, "Q must be symmetric PSD");
  if (!is_symmetric_psd(cfg.R)) throw Error(ErrorKind::kInvalidParameter, "R must be symmetric PSD");
  if (!(cfg.lambda_g >= 0.0)) throw Error(ErrorKind::kInvalidParameter, "lambda_g must be >= 0");
  if (!(cfg.lambda_y >= 0.0)) throw Error(ErrorKind::kInvalidParameter, "lambda_y must be >= 0");
  if (!(cfg.admm_rho > 0.0)) throw Error(ErrorKind::kInvalidParameter, "admm_rho must be > 0");
  if (!(cfg.y_box_weight >= 0.0)) {
    throw Error(ErrorKind::kInvalidParameter, "y_box_weight must be >= 0");
  }
  auto check_box = [](const std::optional<ChannelBox>& box, Index dim, const char* name) {
    if (!box) return;
    if (box->lower.size() != dim || box->upper.size() != dim) {
      throw Error(ErrorKind::kDimensionMismatch, std::string(name) + " needs one bound per channel");
    }
    if ((box->lower.array() > box->upper.array()).any()) {
      throw Error(ErrorKind::kInvalidParameter, std::string(name) + " has lower > upper");
    }
  };
  check_box(cfg.u_box, input_dim, "u_box");
  check_box(cfg.y_box, output_dim, "y_box");
}

const char* to_string(SolveStatus status) noexcept {
  switch (status) {
    case SolveStatus::kOptimal: return "optimal";
    case SolveStatus::kMaxIter: return "max_iter";
    case SolveStatus::kInfeasible: return "infeasible";
  }
  return "?";
}

Mat psd_sqrt(const Mat& w) {
  if (w.size() == 0) return w;
  if (w.isDiagonal()) return w.diagonal().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  Eigen::SelfAdjointEigenSolver<Mat> es(w);
  const Vec s = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return s.asDiagonal() * es.eigenvectors().transpose();
}

DeepcSolution solve_deepc(const HankelSet& h, const Vec& u_ini, const Vec& y_ini, const Vec& r,
                          const DeepcConfig& cfg, DeepcWorkspace* ws) {
  const Index m = h.input_dim;
  const Index p = h.output_dim;
  const Index t_ini = h.t_ini;
  const Index n_h = h.horizon;
  const Index cols = h.columns();
  if (cols < 1) throw Error(ErrorKind::kInvalidArgument, "solve_deepc needs at least one column");
  if (u_ini.size() != m * t_ini || y_ini.size() != p * t_ini || r.size() != p * n_h) {
    throw Error(ErrorKind::kDimensionMismatch,
                "u_ini/y_ini/r sizes do not match (m, p, T_ini, N) of the Hankel data");
  }
  if (cfg.Q.rows() != p || cfg.R.rows() != m) {
    throw Error(ErrorKind::kDimensionMismatch, "Q/R sizes do not match the Hankel data");
  }

  const bool slack = cfg.lambda_y > 0.0;
  Mat A;
  Vec b;
  if (slack) {
    A = h.Up;
    b = u_ini;
  } else {
    A.resize(h.Up.rows() + h.Yp.rows(), cols);
    A << h.Up, h.Yp;
    b.resize(A.rows());
    b << u_ini, y_ini;
  }

  DeepcSolution sol;
  const WeightedData wd = weighted_data(h, y_ini, r, cfg, slack);

  // Null-space split g = Y1 t + Z v with A^T P = [Y1 Z] R.
  Eigen::ColPivHouseholderQR<Mat> qr(A.cols(), A.rows());
  qr.setThreshold(cfg.rank_tol);
  qr.compute(A.transpose());
  const Index rank = qr.rank();
  const Mat q_full = qr.householderQ();
  const Vec b_perm = qr.colsPermutation().transpose() * b;
  Vec g_p = Vec::Zero(cols);
  if (rank > 0) {
    const auto r11 = qr.matrixR().topLeftCorner(rank, rank).template triangularView<Eigen::Upper>();
    const Vec t1 = r11.transpose().solve(b_perm.head(rank));
    g_p.noalias() = q_full.leftCols(rank) * t1;
  }
  const Mat Z = q_full.rightCols(cols - rank);

  const double b_scale = 1.0 + inf_norm(b);
  const bool structurally_short = cols < A.rows();
  const double eq_res = inf_norm(A * g_p - b) / b_scale;
  const bool infeasible = structurally_short || eq_res > cfg.feasibility_tol;

  const Mat B = wd.D * Z;
  const Vec e = wd.d - wd.D * g_p;
  Vec v = Vec::Zero(Z.cols());

  const bool boxed = cfg.u_box.has_value() || cfg.y_box.has_value();
  if (Z.cols() > 0 && !boxed) {
    if (cfg.lambda_g > 0.0) {
      Mat H = B.transpose() * B;
      H.diagonal().array() += cfg.lambda_g;
      Eigen::LLT<Mat> llt(H);
      if (llt.info() == Eigen::Success) {
        v = llt.solve(B.transpose() * e);
      } else {
        // Too ill-conditioned for normal equations: QR of [B; sqrt(lambda_g) I].
        const Index nz = Z.cols();
        Mat aug(B.rows() + nz, nz);
        aug << B, std::sqrt(cfg.lambda_g) * Mat::Identity(nz, nz);
        Vec rhs = Vec::Zero(aug.rows());
        rhs.head(B.rows()) = e;
        v = aug.colPivHouseholderQr().solve(rhs);
      }
    } else {
      // Minimum-norm least squares keeps g minimal when lambda_g == 0.
      Eigen::CompleteOrthogonalDecomposition<Mat> cod;
      cod.setThreshold(cfg.rank_tol);
      cod.compute(B);
      v = cod.solve(e);
    }
  } else if (Z.cols() > 0) {
    const Index nu = cfg.u_box ? n_h * m : 0;
    const Index ny = cfg.y_box ? n_h * p : 0;
    Mat C(nu + ny, cols);
    if (nu) C.topRows(nu) = h.Uf;
    if (ny) C.bottomRows(ny) = h.Yf;
    const Mat Cz = C * Z;
    const Vec c0 = C * g_p;
    const double rho = cfg.admm_rho;

    Mat H = 2.0 * (B.transpose() * B);
    H.noalias() += rho * (Cz.transpose() * Cz);
    H.diagonal().array() += 2.0 * cfg.lambda_g + 1e-10;
    Eigen::LLT<Mat> llt(H);
    if (llt.info() != Eigen::Success) {
      throw Error(ErrorKind::kNumericalBreakdown, "ADMM system factorisation failed");
    }
    const Vec q_lin = 2.0 * (B.transpose() * e);

    Vec z = Vec::Zero(C.rows());
    Vec w = Vec::Zero(C.rows());
    if (ws && ws->z.size() == C.rows() && ws->w.size() == C.rows()) {
      z = ws->z;
      w = ws->w;
    } else {
      z = c0;
    }
    auto project = [&](Vec& s) {
      for (Index k = 0; k < n_h; ++k) {
        for (Index i = 0; i < m && nu; ++i) {
          double& x = s(k * m + i);
          x = std::clamp(x, cfg.u_box->lower(i), cfg.u_box->upper(i));
        }
        for (Index i = 0; i < p && ny; ++i) {
          double& x = s(nu + k * p + i);
          x = soft_box_prox(x, cfg.y_box->lower(i), cfg.y_box->upper(i), cfg.y_box_weight, rho);
        }
      }
    };

    sol.status = SolveStatus::kMaxIter;
    Vec cv(C.rows());
    for (int it = 1; it <= cfg.admm_max_iter; ++it) {
      v = llt.solve(q_lin + rho * (Cz.transpose() * (z - w - c0)));
      cv.noalias() = Cz * v;
      cv += c0;
      const Vec z_prev = z;
      z = cv + w;
      project(z);
      w += cv - z;
      sol.iterations = it;
      const double r_prim = inf_norm(cv - z);
      const double r_dual = rho * inf_norm(Cz.transpose() * (z - z_prev));
      const double prim_scale = 1.0 + std::max(inf_norm(cv), inf_norm(z));
      const double dual_scale = 1.0 + rho * inf_norm(Cz.transpose() * w);
      if (r_prim <= cfg.admm_tol * prim_scale && r_dual <= cfg.admm_tol * dual_scale) {
        sol.status = SolveStatus::kOptimal;
        break;
      }
    }
    if (ws) {
      ws->z = z;
      ws->w = w;
    }
  }

  sol.g = g_p + Z * v;
  if (!sol.g.allFinite()) {
    throw Error(ErrorKind::kNumericalBreakdown, "solve_deepc produced a non-finite g");
  }
  if (infeasible) sol.status = SolveStatus::kInfeasible;

  const Vec uf = h.Uf * sol.g;
  const Vec yf = h.Yf * sol.g;
  sol.u_f = as_rows(uf, n_h, m);
  sol.y_f = as_rows(yf, n_h, p);
  sol.sigma_y = slack ? Vec(h.Yp * sol.g - y_ini) : Vec(Vec::Zero(p * t_ini));

  double obj = 0.0;
  for (Index k = 0; k < n_h; ++k) {
    const Vec ey = yf.segment(k * p, p) - r.segment(k * p, p);
    const Vec uk = uf.segment(k * m, m);
    obj += ey.dot(cfg.Q * ey) + uk.dot(cfg.R * uk);
  }
  obj += cfg.lambda_g * sol.g.squaredNorm();
  if (slack) obj += cfg.lambda_y * sol.sigma_y.squaredNorm();
  if (cfg.y_box) obj += cfg.y_box_weight * box_violation_sq(sol.y_f, *cfg.y_box);
  sol.objective = obj;

  sol.primal_residual = inf_norm(A * sol.g - b) / b_scale;
  if (Z.cols() > 0 && !boxed) {
    const Vec grad = 2.0 * (B.transpose() * (B * v - e)) + 2.0 * cfg.lambda_g * v;
    sol.stationarity_residual = inf_norm(grad) / (1.0 + 2.0 * inf_norm(B.transpose() * e));
  }
  return sol;
}

std::vector<SolveTiming> solve_time_probe(const std::vector<Index>& column_counts,
                                          int repetitions, std::uint64_t seed) {
  std::vector<SolveTiming> table;
  if (column_counts.empty()) return table;
  const Index t_ini = 4;
  const Index n_h = 10;
  const Index max_cols = *std::max_element(column_counts.begin(), column_counts.end());
  const PlantModel plant = make_plant(PlantKind::kLti2);
  Rng rng = make_rng(seed, 0, StreamPurpose::kCollection);
  const Mat inputs = random_inputs(plant, max_cols + t_ini + n_h - 1, 1.0, rng);
  const Trajectory traj = rollout(plant, Vec::Zero(2), inputs);
  const HankelSet full = build_hankel(std::span(&traj, 1), t_ini, n_h);
  const DeepcConfig cfg = DeepcConfig::identity(1, 1, 0.1);

  const Vec u_ini = full.Up.col(0);
  const Vec y_ini = full.Yp.col(0);
  const Vec ref = Vec::Constant(n_h, 0.5);
  for (Index cols : column_counts) {
    std::vector<Index> idx(static_cast<std::size_t>(cols));
    for (Index j = 0; j < cols; ++j) idx[static_cast<std::size_t>(j)] = j;
    const HankelSet h = extract_columns(full, ColumnSubset(idx, full.columns()));
    std::vector<double> times;
    for (int rep = 0; rep < std::max(1, repetitions); ++rep) {
      const auto t0 = std::chrono::steady_clock::now();
      const DeepcSolution s = solve_deepc(h, u_ini, y_ini, ref, cfg);
      const auto t1 = std::chrono::steady_clock::now();
      (void)s;
      times.push_back(std::chrono::duration<double>(t1 - t0).count());
    }
    std::sort(times.begin(), times.end());
    const std::size_t n = times.size();
    const double median = n % 2 ? times[n / 2] : 0.5 * (times[n / 2 - 1] + times[n / 2]);
    table.push_back({cols, median});
  }
  return table;
}

}  // namespace deepsel
