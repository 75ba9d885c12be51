#pragma once

#include <cstdint>
#include <string_view>

#include "deepsel/trajectory.hpp"
#include "deepsel/types.hpp"

namespace deepsel {

enum class SelectionKind { kTopK, kThreshold, kBudget, kL1Nearest, kRandomUniform };

SelectionKind parse_selection_kind(std::string_view name);
std::string_view to_string(SelectionKind kind) noexcept;

struct SelectionRule {
  SelectionKind kind = SelectionKind::kTopK;
  Index k = 1;
  double budget = 0.0;
};

/// Indices of the K smallest theta_j, ties to the lower index, sorted.
ColumnSubset select_topk(const Vec& theta, Index k);

/// {j : theta_j < 0}; may be empty.
ColumnSubset select_threshold(const Vec& theta);

/// Longest prefix of theta sorted ascending (ties by index) whose running
/// sum stays <= budget.
ColumnSubset select_budget(const Vec& theta, double budget);

/// K columns whose [Up; Yp] window is closest in L1 to [u_ini; y_ini].
ColumnSubset select_l1(const HankelSet& h, const Vec& u_ini, const Vec& y_ini, Index k);

/// Uniform K-subset of [0, M) without replacement.
ColumnSubset select_random(Index column_count, Index k, std::uint64_t seed);

}  // namespace deepsel
