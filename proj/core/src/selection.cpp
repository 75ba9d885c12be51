#include "deepsel/selection.hpp"

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

#include "deepsel/errors.hpp"
#include "deepsel/rng.hpp"

namespace deepsel {
namespace {

void check_k(Index k, Index m) {
  if (k < 1 || k > m) {
    throw Error(ErrorKind::kInvalidArgument,
                "K = " + std::to_string(k) + " outside [1, " + std::to_string(m) + "]");
  }
}

/// K smallest scores with index tie-break, returned in ascending index order.
ColumnSubset smallest_k(const Vec& score, Index k) {
  const Index m = score.size();
  check_k(k, m);
  std::vector<Index> idx(static_cast<std::size_t>(m));
  std::iota(idx.begin(), idx.end(), Index{0});
  auto less = [&](Index a, Index b) {
    return score(a) < score(b) || (score(a) == score(b) && a < b);
  };
  std::partial_sort(idx.begin(), idx.begin() + k, idx.end(), less);
  idx.resize(static_cast<std::size_t>(k));
  std::sort(idx.begin(), idx.end());
  return ColumnSubset(std::move(idx), m);
}

}  // namespace

SelectionKind parse_selection_kind(std::string_view name) {
  if (name == "topk") return SelectionKind::kTopK;
  if (name == "threshold") return SelectionKind::kThreshold;
  if (name == "budget") return SelectionKind::kBudget;
  if (name == "l1_nearest" || name == "l1") return SelectionKind::kL1Nearest;
  if (name == "random_uniform" || name == "random") return SelectionKind::kRandomUniform;
  throw Error(ErrorKind::kUnknownKind, "unknown selection rule '" + std::string(name) + "'");
}

std::string_view to_string(SelectionKind kind) noexcept {
  switch (kind) {
    case SelectionKind::kTopK: return "topk";
    case SelectionKind::kThreshold: return "threshold";
    case SelectionKind::kBudget: return "budget";
    case SelectionKind::kL1Nearest: return "l1_nearest";
    case SelectionKind::kRandomUniform: return "random_uniform";
  }
  return "?";
}

ColumnSubset select_topk(const Vec& theta, Index k) { return smallest_k(theta, k); }

ColumnSubset select_threshold(const Vec& theta) {
  std::vector<Index> idx;
  for (Index j = 0; j < theta.size(); ++j) {
    if (theta(j) < 0.0) idx.push_back(j);
  }
  return ColumnSubset(std::move(idx), theta.size());
}

ColumnSubset select_budget(const Vec& theta, double budget) {
  const Index m = theta.size();
  std::vector<Index> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return theta(a) < theta(b); });
  // Longest prefix of the ascending order whose cumulative sum is <= budget.
  std::size_t take = 0;
  double running = 0.0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    running += theta(order[i]);
    if (running <= budget) take = i + 1;
  }
  std::vector<Index> chosen(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take));
  std::sort(chosen.begin(), chosen.end());
  return ColumnSubset(std::move(chosen), m);
}

ColumnSubset select_l1(const HankelSet& h, const Vec& u_ini, const Vec& y_ini, Index k) {
  if (u_ini.size() != h.Up.rows() || y_ini.size() != h.Yp.rows()) {
    throw Error(ErrorKind::kDimensionMismatch, "u_ini/y_ini do not match the Hankel past block");
  }
  const Vec dist = (h.Up.colwise() - u_ini).cwiseAbs().colwise().sum().transpose() +
                   (h.Yp.colwise() - y_ini).cwiseAbs().colwise().sum().transpose();
  return smallest_k(dist, k);
}

ColumnSubset select_random(Index column_count, Index k, std::uint64_t seed) {
  check_k(k, column_count);
  std::vector<Index> all(static_cast<std::size_t>(column_count));
  std::iota(all.begin(), all.end(), Index{0});
  std::vector<Index> out;
  out.reserve(static_cast<std::size_t>(k));
  Rng rng(seed);
  std::sample(all.begin(), all.end(), std::back_inserter(out), k, rng);
  return ColumnSubset(std::move(out), column_count);
}

}  // namespace deepsel
