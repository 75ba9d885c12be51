#include "deepsel/datamodel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <spdlog/spdlog.h>

#include "deepsel/errors.hpp"

namespace deepsel {

IndicatorVector::IndicatorVector(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
  for (auto b : bits_) {
    if (b > 1) throw Error(ErrorKind::kInvalidArgument, "indicator entries must be 0 or 1");
  }
}

IndicatorVector IndicatorVector::from_subset(const ColumnSubset& subset, Index size) {
  IndicatorVector v(size);
  for (Index j : subset.indices()) {
    if (j >= size) throw Error(ErrorKind::kIndexOutOfRange, "subset index exceeds indicator size");
    v.set(j);
  }
  return v;
}

IndicatorVector IndicatorVector::ones(Index size) {
  return IndicatorVector(std::vector<std::uint8_t>(static_cast<std::size_t>(size), 1));
}

Index IndicatorVector::popcount() const noexcept {
  return static_cast<Index>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

ColumnSubset IndicatorVector::to_subset() const {
  std::vector<Index> idx;
  for (std::size_t j = 0; j < bits_.size(); ++j) {
    if (bits_[j]) idx.push_back(static_cast<Index>(j));
  }
  return ColumnSubset(std::move(idx), size());
}

Vec IndicatorVector::as_vector() const {
  Vec v(size());
  for (std::size_t j = 0; j < bits_.size(); ++j) v(static_cast<Index>(j)) = bits_[j];
  return v;
}

std::string IndicatorVector::to_hex() const {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out((bits_.size() + 3) / 4, '0');
  for (std::size_t j = 0; j < bits_.size(); ++j) {
    if (!bits_[j]) continue;
    auto& c = out[j / 4];
    const int nibble = (c >= 'a' ? c - 'a' + 10 : c - '0') | (1 << (j % 4));
    c = kDigits[nibble];
  }
  return out;
}

IndicatorVector IndicatorVector::from_hex(std::string_view hex, Index size) {
  const auto n = static_cast<std::size_t>(size);
  if (hex.size() != (n + 3) / 4) {
    throw Error(ErrorKind::kFormat, "indicator hex has " + std::to_string(hex.size()) +
                                        " digits, expected " + std::to_string((n + 3) / 4));
  }
  IndicatorVector v(size);
  for (std::size_t c = 0; c < hex.size(); ++c) {
    const char ch = hex[c];
    int nibble = 0;
    if (ch >= '0' && ch <= '9') {
      nibble = ch - '0';
    } else if (ch >= 'a' && ch <= 'f') {
      nibble = ch - 'a' + 10;
    } else {
      throw Error(ErrorKind::kFormat, std::string("invalid hex digit '") + ch + "'");
    }
    for (int b = 0; b < 4; ++b) {
      if (!(nibble & (1 << b))) continue;
      const std::size_t j = 4 * c + static_cast<std::size_t>(b);
      if (j >= n) throw Error(ErrorKind::kFormat, "indicator hex sets a bit beyond M");
      v.bits_[j] = 1;
    }
  }
  return v;
}

ContextEncoding parse_context_encoding(std::string_view name) {
  if (name == "direct") return ContextEncoding::kDirect;
  if (name == "compressed") return ContextEncoding::kCompressed;
  if (name == "relative") return ContextEncoding::kRelative;
  throw Error(ErrorKind::kUnknownKind, "unknown context encoding '" + std::string(name) + "'");
}

std::string_view to_string(ContextEncoding enc) noexcept {
  switch (enc) {
    case ContextEncoding::kDirect: return "direct";
    case ContextEncoding::kCompressed: return "compressed";
    case ContextEncoding::kRelative: return "relative";
  }
  return "?";
}

Index context_dim(const ContextDims& d, ContextEncoding enc) noexcept {
  if (enc == ContextEncoding::kCompressed) return d.input_dim + 5 * d.output_dim;
  return (d.input_dim + d.output_dim) * d.t_ini + d.output_dim * d.horizon;
}

Context make_context(const Vec& u_ini, const Vec& y_ini, const Vec& r, const ContextDims& d,
                     ContextEncoding enc) {
  const Index m = d.input_dim;
  const Index p = d.output_dim;
  if (u_ini.size() != m * d.t_ini || y_ini.size() != p * d.t_ini || r.size() != p * d.horizon) {
    throw Error(ErrorKind::kDimensionMismatch, "context pieces do not match (m, p, T_ini, N)");
  }
  const Vec y_last = y_ini.tail(p);
  Context c{enc, Vec(context_dim(d, enc))};
  switch (enc) {
    case ContextEncoding::kDirect:
      c.vector << u_ini, y_ini, r;
      break;
    case ContextEncoding::kRelative: {
      Vec rel = r;
      for (Index k = 0; k < d.horizon; ++k) rel.segment(k * p, p) -= y_last;
      c.vector << u_ini, y_ini, rel;
      break;
    }
    case ContextEncoding::kCompressed: {
      auto channel_mean = [](const Vec& stacked, Index dim, Index steps) {
        Vec acc = Vec::Zero(dim);
        for (Index k = 0; k < steps; ++k) acc += stacked.segment(k * dim, dim);
        return Vec(acc / static_cast<double>(steps));
      };
      c.vector << channel_mean(u_ini, m, d.t_ini), channel_mean(y_ini, p, d.t_ini), y_last,
          r.head(p), r.tail(p), channel_mean(r, p, d.horizon);
      break;
    }
  }
  return c;
}

double predict_linear(const LinearDatamodel& dm, const IndicatorVector& s) {
  if (s.size() != dm.theta.size()) {
    throw Error(ErrorKind::kDimensionMismatch, "indicator length differs from theta length");
  }
  double acc = dm.theta0;
  for (Index j = 0; j < s.size(); ++j) {
    if (s.test(j)) acc += dm.theta(j);
  }
  return acc;
}

LinearDatamodel ridge_fit(const Mat& S, const Vec& J, double lambda) {
  if (S.rows() < 1) throw Error(ErrorKind::kInvalidArgument, "ridge_fit needs at least one sample");
  if (S.rows() != J.size()) {
    throw Error(ErrorKind::kDimensionMismatch, "S has " + std::to_string(S.rows()) +
                                                   " rows but J has " + std::to_string(J.size()));
  }
  if (!(lambda >= 0.0)) throw Error(ErrorKind::kInvalidParameter, "ridge lambda must be >= 0");

  // Centering removes the intercept from the penalised part exactly.
  const Vec s_mean = S.colwise().mean().transpose();
  const double j_mean = J.mean();
  const Mat Sc = S.rowwise() - s_mean.transpose();
  const Vec Jc = J.array() - j_mean;

  LinearDatamodel dm;
  if (lambda > 0.0) {
    Mat G = Sc.transpose() * Sc;
    G.diagonal().array() += lambda;
    dm.theta = G.llt().solve(Sc.transpose() * Jc);
  } else {
    Eigen::CompleteOrthogonalDecomposition<Mat> cod(Sc);
    if (cod.rank() < Sc.cols()) {
      spdlog::warn("ridge_fit: design has rank {} < {} at lambda=0; returning minimum-norm theta",
                   cod.rank(), Sc.cols());
    }
    dm.theta = cod.solve(Jc);
  }
  dm.theta0 = j_mean - s_mean.dot(dm.theta);
  return dm;
}

namespace {

std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j);
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) {
    throw Error(ErrorKind::kInvalidArgument, "spearman needs two equal-length samples (n >= 2)");
  }
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  const Eigen::Map<const Vec> va(ra.data(), static_cast<Index>(ra.size()));
  const Eigen::Map<const Vec> vb(rb.data(), static_cast<Index>(rb.size()));
  const Vec ca = va.array() - va.mean();
  const Vec cb = vb.array() - vb.mean();
  const double denom = ca.norm() * cb.norm();
  if (denom == 0.0) return 0.0;
  return ca.dot(cb) / denom;
}

}  // namespace deepsel
