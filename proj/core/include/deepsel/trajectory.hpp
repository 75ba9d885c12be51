#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "deepsel/types.hpp"

namespace deepsel {

/// Input/output record of one plant rollout. Row k holds u_k (resp. y_k).
class Trajectory {
 public:
  Trajectory() = default;
  Trajectory(Mat inputs, Mat outputs, double dt);

  [[nodiscard]] Index length() const noexcept { return inputs_.rows(); }
  [[nodiscard]] Index input_dim() const noexcept { return inputs_.cols(); }
  [[nodiscard]] Index output_dim() const noexcept { return outputs_.cols(); }
  [[nodiscard]] double dt() const noexcept { return dt_; }

  [[nodiscard]] const Mat& inputs() const noexcept { return inputs_; }
  [[nodiscard]] const Mat& outputs() const noexcept { return outputs_; }

  [[nodiscard]] Vec input(Index k) const { return inputs_.row(k).transpose(); }
  [[nodiscard]] Vec output(Index k) const { return outputs_.row(k).transpose(); }

  bool operator==(const Trajectory& other) const;

 private:
  Mat inputs_;
  Mat outputs_;
  double dt_ = 0.0;
};

/// Sorted, duplicate-free column indices into a HankelSet.
class ColumnSubset {
 public:
  ColumnSubset() = default;
  /// Validates strict ordering and range; throws Error otherwise.
  ColumnSubset(std::vector<Index> indices, Index column_count);

  static ColumnSubset all(Index column_count);
  /// Sorts and deduplicates before validating.
  static ColumnSubset from_unsorted(std::vector<Index> indices, Index column_count);

  [[nodiscard]] const std::vector<Index>& indices() const noexcept { return indices_; }
  [[nodiscard]] std::size_t size() const noexcept { return indices_.size(); }
  [[nodiscard]] bool empty() const noexcept { return indices_.empty(); }
  [[nodiscard]] Index operator[](std::size_t i) const { return indices_[i]; }

  bool operator==(const ColumnSubset&) const = default;

 private:
  std::vector<Index> indices_;
};

/// Block-Hankel data partitioned into past/future input/output blocks.
struct HankelSet {
  Mat Up;
  Mat Yp;
  Mat Uf;
  Mat Yf;
  Index t_ini = 0;
  Index horizon = 0;
  Index input_dim = 0;
  Index output_dim = 0;
  /// Start index of column j inside its source trajectory.
  std::vector<Index> source_offsets;
  /// Which source trajectory column j came from.
  std::vector<Index> source_trajectory;

  [[nodiscard]] Index columns() const noexcept { return Up.cols(); }
  [[nodiscard]] Index depth() const noexcept { return t_ini + horizon; }

  bool operator==(const HankelSet& other) const;
};

/// Column-wise concatenation of per-trajectory Hankel matrices of depth
/// t_ini + horizon. Windows never straddle two trajectories.
HankelSet build_hankel(std::span<const Trajectory> trajs, Index t_ini, Index horizon);

HankelSet extract_columns(const HankelSet& h, const ColumnSubset& subset);

/// Stacked [Up; Yp; Uf; Yf].
Mat stacked_data(const HankelSet& h);

inline constexpr double kDefaultRankTolerance = 1e-9;

/// Numerical rank of [Up; Yp; Uf; Yf]: singular values above
/// rel_tol * sigma_max.
Index excitation_rank(const HankelSet& h, double rel_tol = kDefaultRankTolerance);

}  // namespace deepsel
