#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "deepsel/trajectory.hpp"
#include "deepsel/types.hpp"

namespace deepsel {

/// Binary column-inclusion vector over the M columns of a HankelSet.
class IndicatorVector {
 public:
  IndicatorVector() = default;
  explicit IndicatorVector(Index size) : bits_(static_cast<std::size_t>(size), 0) {}
  explicit IndicatorVector(std::vector<std::uint8_t> bits);

  static IndicatorVector from_subset(const ColumnSubset& subset, Index size);
  static IndicatorVector ones(Index size);

  [[nodiscard]] Index size() const noexcept { return static_cast<Index>(bits_.size()); }
  [[nodiscard]] bool test(Index j) const { return bits_.at(static_cast<std::size_t>(j)) != 0; }
  void set(Index j, bool on = true) { bits_.at(static_cast<std::size_t>(j)) = on ? 1 : 0; }
  [[nodiscard]] Index popcount() const noexcept;

  [[nodiscard]] ColumnSubset to_subset() const;
  [[nodiscard]] Vec as_vector() const;
  [[nodiscard]] const std::vector<std::uint8_t>& bits() const noexcept { return bits_; }

  /// ceil(M/4) lowercase hex digits; digit c carries bits 4c..4c+3, with
  /// bit j contributing 1 << (j % 4).
  [[nodiscard]] std::string to_hex() const;
  static IndicatorVector from_hex(std::string_view hex, Index size);

  bool operator==(const IndicatorVector&) const = default;

 private:
  std::vector<std::uint8_t> bits_;
};

/// Sizes that fix the layout of (u_ini, y_ini, r).
struct ContextDims {
  Index input_dim = 0;
  Index output_dim = 0;
  Index t_ini = 0;
  Index horizon = 0;

  bool operator==(const ContextDims&) const = default;
};

enum class ContextEncoding { kDirect, kCompressed, kRelative };

ContextEncoding parse_context_encoding(std::string_view name);
std::string_view to_string(ContextEncoding enc) noexcept;

struct Context {
  ContextEncoding encoding = ContextEncoding::kDirect;
  Vec vector;
};

Index context_dim(const ContextDims& dims, ContextEncoding enc) noexcept;

/// direct:     [u_ini; y_ini; r]
/// compressed: [mean u_ini; mean y_ini; last y; r_0; r_{N-1}; mean r]
/// relative:   [u_ini; y_ini; r - 1_N (x) last y]
Context make_context(const Vec& u_ini, const Vec& y_ini, const Vec& r, const ContextDims& dims,
                     ContextEncoding enc);

/// Cost model J(s) ~ s^T theta + theta0 at one fixed context.
struct LinearDatamodel {
  Vec theta;
  double theta0 = 0.0;
};

double predict_linear(const LinearDatamodel& dm, const IndicatorVector& s);

/// Ridge estimate with an unpenalised intercept:
///   min_theta,theta0 sum_i (s_i^T theta + theta0 - J_i)^2 + lambda |theta|^2.
/// Rows of `S` are indicator vectors. At lambda == 0 with collinear columns
/// the minimum-norm theta is returned and a warning is logged.
LinearDatamodel ridge_fit(const Mat& S, const Vec& J, double lambda);

/// Spearman rank correlation with average ranks for ties.
double spearman(std::span<const double> a, std::span<const double> b);

}  // namespace deepsel
