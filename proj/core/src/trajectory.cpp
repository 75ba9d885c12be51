#include "deepsel/trajectory.hpp"

#include <algorithm>
#include <string>

#include "deepsel/errors.hpp"

namespace deepsel {

Trajectory::Trajectory(Mat inputs, Mat outputs, double dt)
    : inputs_(std::move(inputs)), outputs_(std::move(outputs)), dt_(dt) {
  if (inputs_.rows() != outputs_.rows()) {
    throw Error(ErrorKind::kDimensionMismatch,
                "trajectory inputs have " + std::to_string(inputs_.rows()) +
                    " steps but outputs have " + std::to_string(outputs_.rows()));
  }
  if (inputs_.rows() < 1) {
    throw Error(ErrorKind::kInvalidArgument, "trajectory must have at least one step");
  }
  if (inputs_.cols() < 1 || outputs_.cols() < 1) {
    throw Error(ErrorKind::kInvalidArgument, "input and output dimensions must be >= 1");
  }
}

bool Trajectory::operator==(const Trajectory& other) const {
  return dt_ == other.dt_ && inputs_.rows() == other.inputs_.rows() &&
         inputs_.cols() == other.inputs_.cols() &&
         outputs_.cols() == other.outputs_.cols() && inputs_ == other.inputs_ &&
         outputs_ == other.outputs_;
}

ColumnSubset::ColumnSubset(std::vector<Index> indices, Index column_count)
    : indices_(std::move(indices)) {
  for (std::size_t i = 0; i < indices_.size(); ++i) {
    if (indices_[i] < 0 || indices_[i] >= column_count) {
      throw Error(ErrorKind::kIndexOutOfRange,
                  "column index " + std::to_string(indices_[i]) + " outside [0, " +
                      std::to_string(column_count) + ")");
    }
    if (i > 0 && indices_[i] <= indices_[i - 1]) {
      throw Error(ErrorKind::kInvalidArgument,
                  "column indices must be strictly increasing");
    }
  }
}

ColumnSubset ColumnSubset::all(Index column_count) {
  std::vector<Index> idx(static_cast<std::size_t>(column_count));
  for (Index j = 0; j < column_count; ++j) idx[static_cast<std::size_t>(j)] = j;
  return ColumnSubset(std::move(idx), column_count);
}

ColumnSubset ColumnSubset::from_unsorted(std::vector<Index> indices, Index column_count) {
  std::sort(indices.begin(), indices.end());
  indices.erase(std::unique(indices.begin(), indices.end()), indices.end());
  return ColumnSubset(std::move(indices), column_count);
}

bool HankelSet::operator==(const HankelSet& other) const {
  auto same = [](const Mat& a, const Mat& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
  };
  return t_ini == other.t_ini && horizon == other.horizon &&
         input_dim == other.input_dim && output_dim == other.output_dim &&
         same(Up, other.Up) && same(Yp, other.Yp) && same(Uf, other.Uf) &&
         same(Yf, other.Yf) && source_offsets == other.source_offsets &&
         source_trajectory == other.source_trajectory;
}

HankelSet build_hankel(std::span<const Trajectory> trajs, Index t_ini, Index horizon) {
  if (t_ini < 1 || horizon < 1) {
    throw Error(ErrorKind::kInvalidArgument, "t_ini and horizon must be >= 1");
  }
  if (trajs.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "build_hankel needs at least one trajectory");
  }
  const Index depth = t_ini + horizon;
  const Index m = trajs.front().input_dim();
  const Index p = trajs.front().output_dim();

  Index total = 0;
  for (std::size_t i = 0; i < trajs.size(); ++i) {
    const auto& tr = trajs[i];
    if (tr.input_dim() != m || tr.output_dim() != p) {
      throw Error(ErrorKind::kDimensionMismatch,
                  "trajectory " + std::to_string(i) + " has dims (" +
                      std::to_string(tr.input_dim()) + ", " +
                      std::to_string(tr.output_dim()) + "), expected (" +
                      std::to_string(m) + ", " + std::to_string(p) + ")");
    }
    if (tr.length() < depth) {
      throw Error(ErrorKind::kTrajectoryTooShort,
                  "trajectory " + std::to_string(i) + " has " +
                      std::to_string(tr.length()) + " steps, need at least " +
                      std::to_string(depth));
    }
    total += tr.length() - depth + 1;
  }

  HankelSet h;
  h.t_ini = t_ini;
  h.horizon = horizon;
  h.input_dim = m;
  h.output_dim = p;
  h.Up.resize(m * t_ini, total);
  h.Uf.resize(m * horizon, total);
  h.Yp.resize(p * t_ini, total);
  h.Yf.resize(p * horizon, total);
  h.source_offsets.reserve(static_cast<std::size_t>(total));
  h.source_trajectory.reserve(static_cast<std::size_t>(total));

  Index col = 0;
  for (std::size_t i = 0; i < trajs.size(); ++i) {
    const auto& u = trajs[i].inputs();
    const auto& y = trajs[i].outputs();
    const Index cols_here = trajs[i].length() - depth + 1;
    for (Index off = 0; off < cols_here; ++off, ++col) {
      for (Index k = 0; k < t_ini; ++k) {
        h.Up.col(col).segment(k * m, m) = u.row(off + k).transpose();
        h.Yp.col(col).segment(k * p, p) = y.row(off + k).transpose();
      }
      for (Index k = 0; k < horizon; ++k) {
        h.Uf.col(col).segment(k * m, m) = u.row(off + t_ini + k).transpose();
        h.Yf.col(col).segment(k * p, p) = y.row(off + t_ini + k).transpose();
      }
      h.source_offsets.push_back(off);
      h.source_trajectory.push_back(static_cast<Index>(i));
    }
  }
  return h;
}

HankelSet extract_columns(const HankelSet& h, const ColumnSubset& subset) {
  const Index total = h.columns();
  for (Index j : subset.indices()) {
    if (j < 0 || j >= total) {
      throw Error(ErrorKind::kIndexOutOfRange,
                  "column " + std::to_string(j) + " outside HankelSet with " +
                      std::to_string(total) + " columns");
    }
  }
  const auto k = static_cast<Index>(subset.size());
  HankelSet out;
  out.t_ini = h.t_ini;
  out.horizon = h.horizon;
  out.input_dim = h.input_dim;
  out.output_dim = h.output_dim;
  out.Up.resize(h.Up.rows(), k);
  out.Yp.resize(h.Yp.rows(), k);
  out.Uf.resize(h.Uf.rows(), k);
  out.Yf.resize(h.Yf.rows(), k);
  out.source_offsets.reserve(subset.size());
  out.source_trajectory.reserve(subset.size());
  for (Index c = 0; c < k; ++c) {
    const Index j = subset[static_cast<std::size_t>(c)];
    out.Up.col(c) = h.Up.col(j);
    out.Yp.col(c) = h.Yp.col(j);
    out.Uf.col(c) = h.Uf.col(j);
    out.Yf.col(c) = h.Yf.col(j);
    out.source_offsets.push_back(h.source_offsets[static_cast<std::size_t>(j)]);
    out.source_trajectory.push_back(h.source_trajectory[static_cast<std::size_t>(j)]);
  }
  return out;
}

Mat stacked_data(const HankelSet& h) {
  Mat d(h.Up.rows() + h.Yp.rows() + h.Uf.rows() + h.Yf.rows(), h.columns());
  d << h.Up, h.Yp, h.Uf, h.Yf;
  return d;
}

Index excitation_rank(const HankelSet& h, double rel_tol) {
  if (h.columns() == 0) return 0;
  const Mat d = stacked_data(h);
  Eigen::BDCSVD<Mat> svd(d);
  const Vec& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) <= 0.0) return 0;
  const double cut = rel_tol * sv(0);
  Index rank = 0;
  for (Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > cut) ++rank;
  }
  return rank;
}

}  // namespace deepsel
