#include "deepsel/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <string>

#include <spdlog/spdlog.h>

#include "deepsel/errors.hpp"
#include "deepsel/rng.hpp"

namespace deepsel {

SelectionPolicy SelectionPolicy::fixed_subset(ColumnSubset s) {
  SelectionPolicy p;
  p.kind = Kind::kFixed;
  p.fixed = std::move(s);
  return p;
}

SelectionPolicy SelectionPolicy::datamodel_topk(const ContextNet& net, Index k) {
  SelectionPolicy p;
  p.kind = Kind::kDatamodel;
  p.net = &net;
  p.rule = {SelectionKind::kTopK, k, 0.0};
  return p;
}

SelectionPolicy SelectionPolicy::l1(Index k) {
  SelectionPolicy p;
  p.kind = Kind::kL1;
  p.rule = {SelectionKind::kL1Nearest, k, 0.0};
  return p;
}

SelectionPolicy SelectionPolicy::random(Index k, std::uint64_t seed) {
  SelectionPolicy p;
  p.kind = Kind::kRandom;
  p.rule = {SelectionKind::kRandomUniform, k, 0.0};
  p.seed = seed;
  return p;
}

Metrics compute_metrics(const Mat& u, const Mat& y, const Mat& r, const Mat& Q, const Mat& R) {
  if (y.rows() != r.rows() || y.cols() != r.cols() || u.rows() != y.rows()) {
    throw Error(ErrorKind::kDimensionMismatch, "metric inputs have inconsistent shapes");
  }
  Metrics m;
  for (Index t = 0; t < y.rows(); ++t) {
    const Vec e = (y.row(t) - r.row(t)).transpose();
    const Vec ut = u.row(t).transpose();
    m.cost += e.dot(Q * e) + ut.dot(R * ut);
    m.iae += e.lpNorm<1>();
    m.ise += e.squaredNorm();
  }
  return m;
}

Metrics compute_metrics(const ClosedLoopResult& res, const Mat& Q, const Mat& R) {
  return compute_metrics(res.u, res.y, res.r, Q, R);
}

Vec extend_reference(const Vec& r, Index output_dim, Index steps) {
  if (output_dim < 1 || r.size() < output_dim || r.size() % output_dim != 0) {
    throw Error(ErrorKind::kDimensionMismatch, "reference length must be a positive multiple of p");
  }
  const Index have = r.size() / output_dim;
  Vec out(steps * output_dim);
  for (Index k = 0; k < steps; ++k) {
    const Index src = std::min(k, have - 1);
    out.segment(k * output_dim, output_dim) = r.segment(src * output_dim, output_dim);
  }
  return out;
}

ClosedLoopResult run_closed_loop(const PlantModel& plant, const Vec& state0, const Vec& u_ini_0,
                                 const Vec& y_ini_0, const HankelSet& h,
                                 const SelectionPolicy& policy, const Vec& ref_track,
                                 const DeepcConfig& cfg, Index t_sim,
                                 const ClosedLoopOptions& opts) {
  const Index m = h.input_dim;
  const Index p = h.output_dim;
  const Index t_ini = h.t_ini;
  const Index n_h = h.horizon;
  if (plant.input_dim() != m || plant.output_dim() != p) {
    throw Error(ErrorKind::kDimensionMismatch, "plant and Hankel data disagree on (m, p)");
  }
  if (u_ini_0.size() != m * t_ini || y_ini_0.size() != p * t_ini) {
    throw Error(ErrorKind::kDimensionMismatch, "u_ini/y_ini do not match (m, p, T_ini)");
  }
  if (t_sim < 1) throw Error(ErrorKind::kInvalidArgument, "T_sim must be >= 1");
  const ContextDims dims{m, p, t_ini, n_h};
  if (policy.kind == SelectionPolicy::Kind::kDatamodel) {
    if (!policy.net) throw Error(ErrorKind::kMissingModel, "datamodel policy needs a network");
    if (policy.net->columns() != h.columns()) {
      throw Error(ErrorKind::kDimensionMismatch,
                  "network predicts " + std::to_string(policy.net->columns()) +
                      " coefficients but the Hankel data has " + std::to_string(h.columns()) +
                      " columns");
    }
  }

  const Vec track = extend_reference(ref_track, p, t_sim + n_h - 1);
  std::optional<HankelSet> fixed_h;
  if (policy.kind == SelectionPolicy::Kind::kFixed) fixed_h = extract_columns(h, policy.fixed);

  Vec noise_std = Vec::Zero(p);
  if (opts.noise.output_noise_std.size() == 1) {
    noise_std.setConstant(opts.noise.output_noise_std(0));
  } else if (opts.noise.output_noise_std.size() == p) {
    noise_std = opts.noise.output_noise_std;
  }
  const bool noisy = (noise_std.array() > 0.0).any();
  Rng noise_rng(opts.noise.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  ClosedLoopResult res;
  res.u = Mat::Zero(t_sim, m);
  res.y = Mat::Zero(t_sim, p);
  res.r = Mat::Zero(t_sim, p);
  Vec x = state0;
  Vec u_ini = u_ini_0;
  Vec y_ini = y_ini_0;
  Vec prev_u = u_ini.tail(m);
  DeepcWorkspace ws;

  for (Index t = 0; t < t_sim; ++t) {
    const Vec window = track.segment(t * p, n_h * p);
    const auto t0 = std::chrono::steady_clock::now();

    std::optional<HankelSet> reduced;
    const HankelSet* active = &h;
    switch (policy.kind) {
      case SelectionPolicy::Kind::kFull:
        break;
      case SelectionPolicy::Kind::kFixed:
        active = &*fixed_h;
        break;
      case SelectionPolicy::Kind::kDatamodel: {
        const Context ctx = make_context(u_ini, y_ini, window, dims, policy.net->meta.encoding);
        const NetOutput out = policy.net->forward(ctx.vector);
        ColumnSubset subset;
        switch (policy.rule.kind) {
          case SelectionKind::kThreshold: subset = select_threshold(out.theta); break;
          case SelectionKind::kBudget: subset = select_budget(out.theta, policy.rule.budget); break;
          default: subset = select_topk(out.theta, policy.rule.k); break;
        }
        if (policy.rule.kind != SelectionKind::kTopK &&
            static_cast<Index>(subset.size()) < m * t_ini) {
          const Index k = std::clamp(policy.fallback_k, m * t_ini, h.columns());
          spdlog::debug("step {}: {} picked {} columns, falling back to top-{}", t,
                        to_string(policy.rule.kind), subset.size(), k);
          subset = select_topk(out.theta, k);
        }
        reduced = extract_columns(h, subset);
        active = &*reduced;
        break;
      }
      case SelectionPolicy::Kind::kL1:
        reduced = extract_columns(h, select_l1(h, u_ini, y_ini, policy.rule.k));
        active = &*reduced;
        break;
      case SelectionPolicy::Kind::kRandom:
        reduced = extract_columns(
            h, select_random(h.columns(), policy.rule.k,
                             derive_seed(policy.seed, static_cast<std::uint64_t>(t),
                                         StreamPurpose::kSelection)));
        active = &*reduced;
        break;
    }

    Vec u_t = prev_u;
    SolveStatus status = SolveStatus::kInfeasible;
    try {
      const DeepcSolution sol = solve_deepc(*active, u_ini, y_ini, window, cfg, &ws);
      status = sol.status;
      if (status != SolveStatus::kInfeasible) u_t = sol.u_f.row(0).transpose();
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kNumericalBreakdown) throw;
      spdlog::debug("step {}: solver breakdown ({}), holding previous input", t, e.what());
    }
    const auto t1 = std::chrono::steady_clock::now();
    if (status == SolveStatus::kInfeasible) ++res.infeasible_steps;
    plant.clamp_input(u_t);

    Vec y_t = plant.observe(x);
    if (noisy) {
      for (Index i = 0; i < p; ++i) y_t(i) += noise_std(i) * normal(noise_rng);
    }
    res.u.row(t) = u_t.transpose();
    res.y.row(t) = y_t.transpose();
    res.r.row(t) = window.head(p).transpose();
    res.status.push_back(status);
    res.subset_size.push_back(active->columns());
    res.step_seconds.push_back(opts.record_time ? std::chrono::duration<double>(t1 - t0).count()
                                                : 0.0);
    res.steps_completed = t + 1;

    x = plant.step(x, u_t);
    if (!x.allFinite()) {
      res.aborted = true;
      res.abort_reason = "non-finite plant state after step " + std::to_string(t);
      break;
    }
    prev_u = u_t;
    if (t_ini > 1) {
      u_ini.head(m * (t_ini - 1)) = u_ini.tail(m * (t_ini - 1)).eval();
      y_ini.head(p * (t_ini - 1)) = y_ini.tail(p * (t_ini - 1)).eval();
    }
    u_ini.tail(m) = u_t;
    y_ini.tail(p) = y_t;
  }

  if (res.steps_completed < t_sim) {
    res.u.conservativeResize(res.steps_completed, Eigen::NoChange);
    res.y.conservativeResize(res.steps_completed, Eigen::NoChange);
    res.r.conservativeResize(res.steps_completed, Eigen::NoChange);
  }
  const Metrics met = compute_metrics(res, cfg.Q, cfg.R);
  res.cost = met.cost;
  res.iae = met.iae;
  res.ise = met.ise;
  res.final_state = x;
  return res;
}

void ModelRegistry::add(ContextNet net) {
  const double alpha = net.meta.alpha;
  if (!models_.empty() && models_.begin()->second.columns() != net.columns()) {
    throw Error(ErrorKind::kDimensionMismatch, "registry models disagree on M");
  }
  models_.insert_or_assign(alpha, std::move(net));
}

const ContextNet& ModelRegistry::select_for(Index k) const {
  if (models_.empty()) throw Error(ErrorKind::kMissingModel, "model registry is empty");
  const ContextNet* best = nullptr;
  double best_gap = 0.0;
  // std::map iterates alpha ascending, so strict < keeps the lower alpha on ties.
  for (const auto& [alpha, net] : models_) {
    const double gap = std::abs(alpha * static_cast<double>(net.columns()) - static_cast<double>(k));
    if (!best || gap < best_gap) {
      best = &net;
      best_gap = gap;
    }
  }
  return *best;
}

const ContextNet& ModelRegistry::select_for(Index k, double max_rel_gap) const {
  const ContextNet& net = select_for(k);
  const double gap =
      std::abs(net.meta.alpha * static_cast<double>(net.columns()) - static_cast<double>(k));
  if (gap / static_cast<double>(k) > max_rel_gap) {
    throw Error(ErrorKind::kMissingModel,
                "no model close enough to K=" + std::to_string(k) + " (best alpha " +
                    std::to_string(net.meta.alpha) + " gives alpha*M=" +
                    std::to_string(net.meta.alpha * static_cast<double>(net.columns())) + ")");
  }
  return net;
}

ModelRegistry ModelRegistry::load_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw Error(ErrorKind::kIo, dir.string() + " is not a directory");
  }
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  ModelRegistry reg;
  for (const auto& f : files) reg.add(load_model(f));
  return reg;
}

BenchMethod parse_bench_method(std::string_view name) {
  if (name == "datamodel") return BenchMethod::kDatamodel;
  if (name == "l1") return BenchMethod::kL1;
  if (name == "random") return BenchMethod::kRandom;
  if (name == "full") return BenchMethod::kFull;
  throw Error(ErrorKind::kUnknownKind, "unknown bench method '" + std::string(name) + "'");
}

std::string_view to_string(BenchMethod m) noexcept {
  switch (m) {
    case BenchMethod::kDatamodel: return "datamodel";
    case BenchMethod::kL1: return "l1";
    case BenchMethod::kRandom: return "random";
    case BenchMethod::kFull: return "full";
  }
  return "?";
}

}  // namespace deepsel
