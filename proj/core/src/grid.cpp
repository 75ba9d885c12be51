#include "deepsel/grid.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "deepsel/errors.hpp"
#include "deepsel/rng.hpp"
#include "deepsel/trajectory_io.hpp"

namespace deepsel {
namespace {

struct Cell {
  BenchMethod method;
  Index k;
  std::size_t seed_index;
};

GridRow run_cell(const ExperimentGrid& grid, const ModelRegistry* registry, const Cell& cell,
                 const GridScenario& sc) {
  const HankelSet& h = *grid.hankel;
  GridRow row;
  row.method = cell.method;
  row.k = cell.k;
  row.seed = grid.seeds[cell.seed_index];
  try {
    SelectionPolicy policy;
    switch (cell.method) {
      case BenchMethod::kFull: policy = SelectionPolicy::full(); break;
      case BenchMethod::kL1: policy = SelectionPolicy::l1(cell.k); break;
      case BenchMethod::kRandom:
        policy = SelectionPolicy::random(
            cell.k, derive_seed(row.seed, static_cast<std::uint64_t>(cell.k),
                                StreamPurpose::kSelection));
        break;
      case BenchMethod::kDatamodel:
        if (!registry) throw Error(ErrorKind::kMissingModel, "datamodel method needs models");
        policy = SelectionPolicy::datamodel_topk(registry->select_for(cell.k, grid.max_rel_gap),
                                                 cell.k);
        break;
    }
    ClosedLoopOptions opts;
    opts.record_time = grid.record_step_time;
    opts.noise = grid.noise;
    opts.noise.seed = derive_seed(row.seed, 0, StreamPurpose::kNoise);
    const ClosedLoopResult res =
        run_closed_loop(*grid.plant, sc.initial.state, sc.initial.u_ini, sc.initial.y_ini, h,
                        policy, sc.track, grid.deepc, grid.t_sim, opts);
    row.cost = res.cost;
    row.iae = res.iae;
    row.ise = res.ise;
    row.infeasible_steps = res.infeasible_steps;
    if (!res.step_seconds.empty()) {
      row.mean_step_ms = 1e3 *
                         std::accumulate(res.step_seconds.begin(), res.step_seconds.end(), 0.0) /
                         static_cast<double>(res.step_seconds.size());
    }
    if (res.aborted) {
      row.aborted = true;
      row.error = res.abort_reason;
      row.cost = row.iae = row.ise = std::numeric_limits<double>::quiet_NaN();
    }
  } catch (const Error& e) {
    row.aborted = true;
    row.error = e.what();
    row.cost = row.iae = row.ise = std::numeric_limits<double>::quiet_NaN();
  }
  if (row.aborted) {
    spdlog::warn("cell {} K={} seed={} aborted: {}", to_string(row.method), row.k, row.seed,
                 row.error);
  }
  return row;
}

template <typename T>
T parse_number(std::string_view s, const std::string& what) {
  T value{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    if constexpr (std::is_floating_point_v<T>) {
      if (s == "nan") return std::numeric_limits<T>::quiet_NaN();
    }
    throw Error(ErrorKind::kFormat, "bad " + what + " '" + std::string(s) + "'");
  }
  return value;
}

void mean_std(const std::vector<double>& v, double& mean, double& sd) {
  mean = sd = 0.0;
  if (v.empty()) return;
  mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  if (v.size() < 2) return;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot open " + path.string() + " for writing");
  return out;
}

}  // namespace

GridScenario make_grid_scenario(const ExperimentGrid& grid, std::uint64_t seed) {
  const HankelSet& h = *grid.hankel;
  const ContextDims dims{h.input_dim, h.output_dim, h.t_ini, h.horizon};
  GridScenario sc;
  sc.initial = sample_initial(*grid.plant, dims, grid.scenario, grid.initial,
                              derive_seed(seed, 0, StreamPurpose::kInitial));
  const Vec r = sample_reference(sc.initial.y_ini, dims, grid.scenario.ref_strategy,
                                 grid.reference, derive_seed(seed, 0, StreamPurpose::kReference));
  sc.track = extend_reference(r, dims.output_dim, grid.t_sim + dims.horizon - 1);
  return sc;
}

std::vector<GridRow> run_grid(const ExperimentGrid& grid, const ModelRegistry* registry) {
  if (!grid.plant || !grid.hankel) {
    throw Error(ErrorKind::kInvalidArgument, "grid needs a plant and Hankel data");
  }
  if (grid.methods.empty() || grid.k_values.empty() || grid.seeds.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "grid axes must be non-empty");
  }
  for (Index k : grid.k_values) {
    if (k < 1 || k > grid.hankel->columns()) {
      throw Error(ErrorKind::kInvalidParameter,
                  "K=" + std::to_string(k) + " outside [1, M=" +
                      std::to_string(grid.hankel->columns()) + "]");
    }
  }

  std::vector<GridScenario> scenarios;
  scenarios.reserve(grid.seeds.size());
  for (std::uint64_t seed : grid.seeds) scenarios.push_back(make_grid_scenario(grid, seed));

  std::vector<Cell> cells;
  for (BenchMethod method : grid.methods) {
    if (method == BenchMethod::kFull) {
      for (std::size_t s = 0; s < grid.seeds.size(); ++s) {
        cells.push_back({method, grid.hankel->columns(), s});
      }
      continue;
    }
    for (Index k : grid.k_values) {
      for (std::size_t s = 0; s < grid.seeds.size(); ++s) cells.push_back({method, k, s});
    }
  }

  std::vector<GridRow> rows(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      rows[i] = run_cell(grid, registry, cells[i], scenarios[cells[i].seed_index]);
    }
  };
  const unsigned threads = std::max(1u, grid.threads);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  return rows;
}

std::vector<AggregateRow> aggregate(const std::vector<GridRow>& rows) {
  std::vector<std::pair<BenchMethod, Index>> order;
  std::map<std::pair<int, Index>, std::vector<const GridRow*>> groups;
  for (const auto& r : rows) {
    const auto key = std::make_pair(static_cast<int>(r.method), r.k);
    if (!groups.contains(key)) order.emplace_back(r.method, r.k);
    groups[key].push_back(&r);
  }
  std::vector<AggregateRow> out;
  for (const auto& [method, k] : order) {
    const auto& g = groups[{static_cast<int>(method), k}];
    AggregateRow a;
    a.method = method;
    a.k = k;
    a.runs = static_cast<Index>(g.size());
    std::vector<double> cost, iae, ise, ms, inf;
    for (const GridRow* r : g) {
      if (r->aborted) {
        ++a.aborted;
        continue;
      }
      cost.push_back(r->cost);
      iae.push_back(r->iae);
      ise.push_back(r->ise);
      ms.push_back(r->mean_step_ms);
      inf.push_back(static_cast<double>(r->infeasible_steps));
    }
    double unused = 0.0;
    mean_std(cost, a.cost_mean, a.cost_std);
    mean_std(iae, a.iae_mean, a.iae_std);
    mean_std(ise, a.ise_mean, a.ise_std);
    mean_std(ms, a.step_ms_mean, unused);
    mean_std(inf, a.infeasible_mean, unused);
    out.push_back(a);
  }
  return out;
}

void write_results_csv(const std::filesystem::path& path, const std::vector<GridRow>& rows) {
  auto out = open_out(path);
  out << kResultsHeader << '\n';
  for (const auto& r : rows) {
    out << to_string(r.method) << ',' << r.k << ',' << r.seed << ',' << format_double(r.cost)
        << ',' << format_double(r.iae) << ',' << format_double(r.ise) << ','
        << format_double(r.mean_step_ms) << ',' << r.infeasible_steps << '\n';
  }
  if (!out) throw Error(ErrorKind::kIo, "write failed for " + path.string());
}

std::vector<GridRow> read_results_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kResultsHeader) {
    throw Error(ErrorKind::kFormat, path.string() + ": unexpected results header");
  }
  std::vector<GridRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string_view> f;
    std::string_view rest(line);
    for (std::size_t pos; (pos = rest.find(',')) != std::string_view::npos;) {
      f.push_back(rest.substr(0, pos));
      rest.remove_prefix(pos + 1);
    }
    f.push_back(rest);
    if (f.size() != 8) {
      throw Error(ErrorKind::kFormat,
                  path.string() + ":" + std::to_string(line_no) + ": expected 8 fields");
    }
    GridRow r;
    r.method = parse_bench_method(f[0]);
    r.k = parse_number<Index>(f[1], "K");
    r.seed = parse_number<std::uint64_t>(f[2], "seed");
    r.cost = parse_number<double>(f[3], "cost");
    r.iae = parse_number<double>(f[4], "iae");
    r.ise = parse_number<double>(f[5], "ise");
    r.mean_step_ms = parse_number<double>(f[6], "mean_step_ms");
    r.infeasible_steps = parse_number<Index>(f[7], "infeasible_steps");
    r.aborted = !std::isfinite(r.cost);
    rows.push_back(r);
  }
  return rows;
}

void write_aggregate_tsv(const std::filesystem::path& path, const std::vector<AggregateRow>& agg) {
  auto out = open_out(path);
  out << "method\tK\truns\taborted\tcost_mean\tcost_std\tiae_mean\tiae_std\tise_mean\tise_std"
         "\tmean_step_ms\tinfeasible_mean\n";
  for (const auto& a : agg) {
    out << to_string(a.method) << '\t' << a.k << '\t' << a.runs << '\t' << a.aborted << '\t'
        << format_double(a.cost_mean) << '\t' << format_double(a.cost_std) << '\t'
        << format_double(a.iae_mean) << '\t' << format_double(a.iae_std) << '\t'
        << format_double(a.ise_mean) << '\t' << format_double(a.ise_std) << '\t'
        << format_double(a.step_ms_mean) << '\t' << format_double(a.infeasible_mean) << '\n';
  }
  if (!out) throw Error(ErrorKind::kIo, "write failed for " + path.string());
}

void write_gnuplot_dat(const std::filesystem::path& path, const std::vector<AggregateRow>& agg) {
  auto out = open_out(path);
  std::vector<BenchMethod> methods;
  for (const auto& a : agg) {
    if (std::find(methods.begin(), methods.end(), a.method) == methods.end()) {
      methods.push_back(a.method);
    }
  }
  bool first = true;
  for (BenchMethod m : methods) {
    if (!first) out << "\n\n";
    first = false;
    out << "# " << to_string(m) << "\n# K cost_mean cost_std\n";
    for (const auto& a : agg) {
      if (a.method == m) {
        out << a.k << ' ' << format_double(a.cost_mean) << ' ' << format_double(a.cost_std)
            << '\n';
      }
    }
  }
  if (!out) throw Error(ErrorKind::kIo, "write failed for " + path.string());
}

std::string format_report(const std::vector<AggregateRow>& agg) {
  std::ostringstream os;
  os << std::left << std::setw(10) << "method" << std::right << std::setw(7) << "K"
     << std::setw(6) << "runs" << std::setw(24) << "cost (mean +- std)" << std::setw(22)
     << "IAE (mean +- std)" << std::setw(12) << "step ms" << std::setw(10) << "infeas"
     << '\n';
  for (const auto& a : agg) {
    std::ostringstream cost, iae;
    cost << std::setprecision(4) << a.cost_mean << " +- " << a.cost_std;
    iae << std::setprecision(4) << a.iae_mean << " +- " << a.iae_std;
    os << std::left << std::setw(10) << to_string(a.method) << std::right << std::setw(7) << a.k
       << std::setw(6) << a.runs << std::setw(24) << cost.str() << std::setw(22) << iae.str()
       << std::setw(12) << std::setprecision(3) << a.step_ms_mean << std::setw(10)
       << std::setprecision(3) << a.infeasible_mean << '\n';
  }

  std::map<Index, std::vector<const AggregateRow*>> by_k;
  for (const auto& a : agg) by_k[a.k].push_back(&a);
  os << "\ncost vs K\n";
  for (const auto& [k, group] : by_k) {
    const AggregateRow* best = nullptr;
    for (const AggregateRow* a : group) {
      if (a->runs > a->aborted && (!best || a->cost_mean < best->cost_mean)) best = a;
    }
    os << "  K=" << k << ':';
    for (const AggregateRow* a : group) {
      os << ' ' << to_string(a->method) << '=' << std::setprecision(4) << a->cost_mean
         << (a == best ? "*" : "");
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace deepsel
