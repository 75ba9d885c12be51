#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "deepsel/trajectory.hpp"
#include "deepsel/types.hpp"

namespace deepsel {

/// Per-channel bounds, repeated over every step of the horizon.
struct ChannelBox {
  Vec lower;
  Vec upper;
};

struct DeepcConfig {
  Mat Q;  ///< output-error weight, p x p, symmetric PSD
  Mat R;  ///< input weight, m x m, symmetric PSD
  double lambda_g = 1.0;
  /// Weight on the past-output slack. Zero turns the slack off and makes
  /// Yp g = y_ini a hard constraint.
  double lambda_y = 1e5;
  std::optional<ChannelBox> u_box;
  /// Output bounds, enforced as a quadratic penalty on the violation.
  std::optional<ChannelBox> y_box;
  double y_box_weight = 1e3;

  double feasibility_tol = 1e-7;
  double rank_tol = 1e-10;
  double admm_tol = 1e-7;
  int admm_max_iter = 5000;
  double admm_rho = 1.0;

  /// Q = I_p, R = r_weight * I_m, remaining fields at their defaults.
  static DeepcConfig identity(Index input_dim, Index output_dim, double r_weight = 0.0);
};

/// Throws Error(kInvalidParameter) when Q/R are not symmetric PSD or a
/// weight is negative.
void validate(const DeepcConfig& cfg, Index input_dim, Index output_dim);

enum class SolveStatus { kOptimal, kMaxIter, kInfeasible };

const char* to_string(SolveStatus status) noexcept;

struct DeepcSolution {
  Vec g;
  Mat u_f;  ///< N x m, row k = u_{f,k}
  Mat y_f;  ///< N x p
  Vec sigma_y;
  double objective = 0.0;
  SolveStatus status = SolveStatus::kOptimal;
  int iterations = 0;
  /// Max-norm violation of the hard equality block, relative to 1 + |b|.
  double primal_residual = 0.0;
  /// Max-norm reduced gradient over the equality null space, relative.
  double stationarity_residual = 0.0;
};

/// ADMM state carried between consecutive solves of a receding-horizon
/// loop. One workspace per controller; not shareable mid-solve.
struct DeepcWorkspace {
  Vec z;
  Vec w;
};

/// Solves the (possibly column-reduced) DeePC problem over g:
///
///   min  sum_k |Yf_k g - r_k|_Q^2 + |Uf_k g|_R^2 + lambda_g |g|^2
///        + lambda_y |Yp g - y_ini|^2
///   s.t. Up g = u_ini   (and Yp g = y_ini when lambda_y == 0)
///
/// The equality block is removed by a null-space parameterisation. Without
/// bounds the remaining ridge problem is solved directly (minimum-norm g at
/// lambda_g == 0); with u_box / y_box it is solved by ADMM with fixed
/// penalty, warm-started from `ws` when given.
DeepcSolution solve_deepc(const HankelSet& h, const Vec& u_ini, const Vec& y_ini, const Vec& r,
                          const DeepcConfig& cfg, DeepcWorkspace* ws = nullptr);

struct SolveTiming {
  Index columns = 0;
  double median_seconds = 0.0;
};

/// Median wall time of solve_deepc on a fixed lti2-data problem family for
/// each requested column count.
std::vector<SolveTiming> solve_time_probe(const std::vector<Index>& column_counts,
                                          int repetitions = 5, std::uint64_t seed = 7);

/// Symmetric square root S with S^T S = W for a PSD matrix W.
Mat psd_sqrt(const Mat& w);

}  // namespace deepsel
