#include "deepsel/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <numbers>
#include <random>
#include <string>
#include <thread>

#include <spdlog/spdlog.h>

#include "deepsel/errors.hpp"
#include "deepsel/rng.hpp"

namespace deepsel {
namespace {

Vec broadcast(const Vec& v, Index dim, const char* what) {
  if (v.size() == dim) return v;
  if (v.size() == 1) return Vec::Constant(dim, v(0));
  throw Error(ErrorKind::kDimensionMismatch,
              std::string(what) + " must have 1 or " + std::to_string(dim) + " entries");
}

Vec tile(const Vec& block, Index times) {
  Vec out(block.size() * times);
  for (Index k = 0; k < times; ++k) out.segment(k * block.size(), block.size()) = block;
  return out;
}

Vec stack_rows(const Mat& rows, Index first, Index count) {
  Vec out(rows.cols() * count);
  for (Index k = 0; k < count; ++k) {
    out.segment(k * rows.cols(), rows.cols()) = rows.row(first + k).transpose();
  }
  return out;
}

}  // namespace

InitialDistribution parse_initial_distribution(std::string_view name) {
  if (name == "random_rollout_suffix") return InitialDistribution::kRandomRolloutSuffix;
  if (name == "archive_draw") return InitialDistribution::kArchiveDraw;
  throw Error(ErrorKind::kUnknownKind, "unknown initial distribution '" + std::string(name) + "'");
}

std::string_view to_string(InitialDistribution d) noexcept {
  return d == InitialDistribution::kArchiveDraw ? "archive_draw" : "random_rollout_suffix";
}

ReferenceStrategy parse_reference_strategy(std::string_view name) {
  if (name == "constant_setpoint") return ReferenceStrategy::kConstantSetpoint;
  if (name == "perturbation") return ReferenceStrategy::kPerturbation;
  if (name == "primitives") return ReferenceStrategy::kPrimitives;
  if (name == "relative") return ReferenceStrategy::kRelative;
  throw Error(ErrorKind::kUnknownKind, "unknown reference strategy '" + std::string(name) + "'");
}

std::string_view to_string(ReferenceStrategy s) noexcept {
  switch (s) {
    case ReferenceStrategy::kConstantSetpoint: return "constant_setpoint";
    case ReferenceStrategy::kPerturbation: return "perturbation";
    case ReferenceStrategy::kPrimitives: return "primitives";
    case ReferenceStrategy::kRelative: return "relative";
  }
  return "?";
}

std::string_view to_string(SampleStatus s) noexcept {
  switch (s) {
    case SampleStatus::kOk: return "ok";
    case SampleStatus::kInfeasible: return "infeasible";
    case SampleStatus::kDiverged: return "diverged";
  }
  return "?";
}

SampleStatus parse_sample_status(std::string_view name) {
  if (name == "ok") return SampleStatus::kOk;
  if (name == "infeasible") return SampleStatus::kInfeasible;
  if (name == "diverged") return SampleStatus::kDiverged;
  throw Error(ErrorKind::kFormat, "unknown sample status '" + std::string(name) + "'");
}

InitialCondition sample_initial(const PlantModel& plant, const ContextDims& dims,
                                const SamplerSpec& spec, const InitialSamplerConfig& cfg,
                                std::uint64_t seed) {
  const Index t_ini = dims.t_ini;
  Rng rng(seed);
  InitialCondition ic;
  if (spec.init_dist == InitialDistribution::kRandomRolloutSuffix) {
    const Vec x0 = random_reset(plant, cfg.reset_scale, rng);
    const Index steps = std::max(cfg.burn_in, t_ini);
    const Mat inputs = random_inputs(plant, steps, cfg.input_amplitude, rng);
    const RolloutResult rr = simulate(plant, x0, inputs);
    ic.u_ini = stack_rows(rr.traj.inputs(), steps - t_ini, t_ini);
    ic.y_ini = stack_rows(rr.traj.outputs(), steps - t_ini, t_ini);
    ic.state = rr.final_state;
    return ic;
  }

  if (cfg.archive.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "archive_draw needs archived trajectories");
  }
  std::uniform_int_distribution<std::size_t> pick_traj(0, cfg.archive.size() - 1);
  const ArchivedTrajectory& entry = cfg.archive[pick_traj(rng)];
  if (entry.meta.initial_state.size() != plant.state_dim()) {
    throw Error(ErrorKind::kDimensionMismatch, "archived trajectory lacks a usable reset state");
  }
  if (entry.traj.length() < t_ini) {
    throw Error(ErrorKind::kTrajectoryTooShort, "archived trajectory shorter than T_ini");
  }
  std::uniform_int_distribution<Index> pick_offset(0, entry.traj.length() - t_ini);
  const Index offset = pick_offset(rng);
  const Mat history = entry.traj.inputs().topRows(offset + t_ini);
  const RolloutResult rr = simulate(plant, entry.meta.initial_state, history);
  ic.u_ini = stack_rows(entry.traj.inputs(), offset, t_ini);
  ic.y_ini = stack_rows(entry.traj.outputs(), offset, t_ini);
  ic.state = rr.final_state;
  return ic;
}

Vec make_primitive(PrimitiveKind kind, const Vec& amplitude, double period, double phase,
                   const Vec& y_last, Index horizon) {
  const Index p = amplitude.size();
  Vec r(p * horizon);
  for (Index k = 0; k < horizon; ++k) {
    const double frac = horizon > 1 ? static_cast<double>(k) / static_cast<double>(horizon - 1) : 1.0;
    Vec rk(p);
    switch (kind) {
      case PrimitiveKind::kStep: rk = amplitude; break;
      case PrimitiveKind::kRamp: rk = amplitude * frac; break;
      case PrimitiveKind::kSinusoid:
        rk = amplitude * std::sin(2.0 * std::numbers::pi * static_cast<double>(k) / period + phase);
        break;
      case PrimitiveKind::kReturnToOrigin: rk = y_last * (1.0 - frac); break;
    }
    r.segment(k * p, p) = rk;
  }
  return r;
}

Vec sample_reference(const Vec& y_ini, const ContextDims& dims, ReferenceStrategy strategy,
                     const ReferenceConfig& cfg, std::uint64_t seed) {
  const Index p = dims.output_dim;
  const Index n_h = dims.horizon;
  if (y_ini.size() != p * dims.t_ini) {
    throw Error(ErrorKind::kDimensionMismatch, "y_ini does not match p * T_ini");
  }
  const Vec y_last = y_ini.tail(p);
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  switch (strategy) {
    case ReferenceStrategy::kConstantSetpoint: {
      const Vec lo = broadcast(cfg.setpoint_lower, p, "setpoint_lower");
      const Vec hi = broadcast(cfg.setpoint_upper, p, "setpoint_upper");
      Vec sp(p);
      for (Index i = 0; i < p; ++i) sp(i) = lo(i) + unit(rng) * (hi(i) - lo(i));
      return tile(sp, n_h);
    }
    case ReferenceStrategy::kPerturbation: {
      const Vec sd = broadcast(cfg.perturbation_std, p, "perturbation_std");
      Vec r = tile(y_last, n_h);
      for (Index k = 0; k < n_h; ++k) {
        for (Index i = 0; i < p; ++i) r(k * p + i) += sd(i) * normal(rng);
      }
      return r;
    }
    case ReferenceStrategy::kPrimitives: {
      std::uniform_int_distribution<int> pick(0, 3);
      const auto kind = static_cast<PrimitiveKind>(pick(rng));
      Vec amp(p);
      for (Index i = 0; i < p; ++i) amp(i) = cfg.primitive_amplitude * (2.0 * unit(rng) - 1.0);
      const double period =
          cfg.primitive_min_period + unit(rng) * (cfg.primitive_max_period - cfg.primitive_min_period);
      const double phase = 2.0 * std::numbers::pi * unit(rng);
      return make_primitive(kind, amp, period, phase, y_last, n_h);
    }
    case ReferenceStrategy::kRelative: {
      const Vec d = broadcast(cfg.relative_delta, p, "relative_delta");
      Vec delta(p);
      for (Index i = 0; i < p; ++i) delta(i) = d(i) * (2.0 * unit(rng) - 1.0);
      Vec r = tile(Vec(y_last + delta), n_h);
      if (cfg.relative_jitter_std > 0.0) {
        for (Index j = 0; j < r.size(); ++j) r(j) += cfg.relative_jitter_std * normal(rng);
      }
      return r;
    }
  }
  throw Error(ErrorKind::kUnknownKind, "unknown reference strategy");
}

IndicatorVector sample_indicator(Index columns, double alpha, std::uint64_t seed) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw Error(ErrorKind::kInvalidParameter, "alpha must lie in (0, 1)");
  }
  Rng rng(seed);
  std::bernoulli_distribution coin(alpha);
  IndicatorVector s(columns);
  for (Index j = 0; j < columns; ++j) s.set(j, coin(rng));
  return s;
}

IndicatorVector sample_indicator(Index columns, double alpha, Index k_min, std::uint64_t seed,
                                 int* resamples) {
  if (k_min > columns) {
    throw Error(ErrorKind::kInvalidParameter, "K_min = " + std::to_string(k_min) +
                                                  " exceeds M = " + std::to_string(columns));
  }
  constexpr int kMaxAttempts = 100000;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    IndicatorVector s = sample_indicator(
        columns, alpha, derive_seed(seed, static_cast<std::uint64_t>(attempt), StreamPurpose::kIndicator));
    if (s.popcount() >= k_min) {
      if (resamples) *resamples = attempt;
      return s;
    }
  }
  throw Error(ErrorKind::kInvalidParameter,
              "alpha too small to reach K_min = " + std::to_string(k_min) + " columns");
}

TrainingSample generate_sample(const GenerationSetup& setup, Index i, std::uint64_t master_seed) {
  if (!setup.plant || !setup.hankel) {
    throw Error(ErrorKind::kInvalidArgument, "generation setup needs a plant and Hankel data");
  }
  const PlantModel& plant = *setup.plant;
  const HankelSet& h = *setup.hankel;
  const ContextDims dims{h.input_dim, h.output_dim, h.t_ini, h.horizon};
  const Index k_min = setup.k_min > 0 ? setup.k_min : (dims.input_dim + dims.output_dim) * dims.t_ini;
  if (setup.spec.t_sim < dims.horizon) {
    throw Error(ErrorKind::kInvalidParameter, "T_sim must be >= N");
  }

  TrainingSample ts;
  ts.index = i;
  ts.seed = derive_seed(master_seed, static_cast<std::uint64_t>(i), StreamPurpose::kScenario);
  ts.t_sim = setup.spec.t_sim;
  ts.alpha = setup.spec.alpha;

  InitialCondition ic;
  try {
    ic = sample_initial(plant, dims, setup.spec, setup.initial,
                        derive_seed(ts.seed, 0, StreamPurpose::kInitial));
  } catch (const NonFiniteStateError& e) {
    spdlog::warn("sample {}: initial rollout failed: {}", i, e.what());
    ts.u_ini = Vec::Zero(dims.input_dim * dims.t_ini);
    ts.y_ini = Vec::Zero(dims.output_dim * dims.t_ini);
    ts.r = Vec::Zero(dims.output_dim * dims.horizon);
    ts.s = IndicatorVector(h.columns());
    ts.status = SampleStatus::kDiverged;
    return ts;
  }
  ts.u_ini = ic.u_ini;
  ts.y_ini = ic.y_ini;
  ts.r = sample_reference(ic.y_ini, dims, setup.spec.ref_strategy, setup.reference,
                          derive_seed(ts.seed, 0, StreamPurpose::kReference));
  ts.s = sample_indicator(h.columns(), setup.spec.alpha, k_min,
                          derive_seed(ts.seed, 0, StreamPurpose::kIndicator), &ts.resamples);

  const Vec track = extend_reference(ts.r, dims.output_dim, setup.spec.t_sim + dims.horizon - 1);
  ClosedLoopOptions opts;
  opts.record_time = false;
  opts.noise = setup.noise;
  opts.noise.seed = derive_seed(ts.seed, 0, StreamPurpose::kNoise);
  const ClosedLoopResult res =
      run_closed_loop(plant, ic.state, ic.u_ini, ic.y_ini, h,
                      SelectionPolicy::fixed_subset(ts.s.to_subset()), track, setup.deepc,
                      setup.spec.t_sim, opts);
  ts.infeasible_steps = res.infeasible_steps;
  ts.cost = res.cost;
  if (res.aborted || !std::isfinite(res.cost)) {
    ts.status = SampleStatus::kDiverged;
  } else if (res.infeasible_steps > 0) {
    ts.status = SampleStatus::kInfeasible;
  }
  return ts;
}

Dataset generate_dataset(const GenerationSetup& setup, Index n_train, std::uint64_t master_seed) {
  if (!setup.plant || !setup.hankel) {
    throw Error(ErrorKind::kInvalidArgument, "generation setup needs a plant and Hankel data");
  }
  if (n_train < 0) throw Error(ErrorKind::kInvalidArgument, "N_train must be >= 0");
  const HankelSet& h = *setup.hankel;
  Dataset ds;
  ds.header.dims = {h.input_dim, h.output_dim, h.t_ini, h.horizon};
  ds.header.columns = h.columns();
  ds.header.alpha = setup.spec.alpha;
  ds.header.t_sim = setup.spec.t_sim;
  ds.header.master_seed = master_seed;
  ds.samples.resize(static_cast<std::size_t>(n_train));

  std::atomic<Index> next{0};
  std::atomic<std::size_t> done{0};
  std::mutex progress_mutex;
  auto worker = [&] {
    for (Index i = next++; i < n_train; i = next++) {
      ds.samples[static_cast<std::size_t>(i)] = generate_sample(setup, i, master_seed);
      const std::size_t d = ++done;
      if (setup.progress) {
        std::lock_guard lock(progress_mutex);
        setup.progress(d, static_cast<std::size_t>(n_train));
      }
    }
  };
  const unsigned threads = std::max(1u, setup.threads);
  if (threads == 1 || n_train < 2) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  std::vector<double> feasible;
  for (const auto& s : ds.samples) {
    if (s.status == SampleStatus::kOk) feasible.push_back(s.cost);
  }
  double penalty = setup.fallback_penalty;
  if (!feasible.empty()) {
    std::sort(feasible.begin(), feasible.end());
    const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(feasible.size())));
    penalty = 10.0 * feasible[std::max<std::size_t>(rank, 1) - 1];
  }
  ds.header.penalty = penalty;
  for (auto& s : ds.samples) {
    if (s.status != SampleStatus::kOk) s.cost = penalty;
  }
  return ds;
}

std::vector<NetSample> to_net_samples(const Dataset& ds, ContextEncoding enc) {
  std::vector<NetSample> out;
  out.reserve(ds.samples.size());
  for (const auto& s : ds.samples) {
    out.push_back({make_context(s.u_ini, s.y_ini, s.r, ds.header.dims, enc).vector,
                   s.s.as_vector(), s.cost});
  }
  return out;
}

ModelRegistry train_alpha_ensemble(std::span<const Dataset> datasets, const EnsembleOptions& opts,
                                   std::vector<EnsembleReport>* report) {
  if (datasets.empty()) throw Error(ErrorKind::kInvalidArgument, "no datasets to train on");
  ModelRegistry reg;
  for (const Dataset& ds : datasets) {
    EnsembleReport rep;
    rep.alpha = ds.header.alpha;
    try {
      const auto samples = to_net_samples(ds, opts.encoding);
      ContextNet net = make_context_net(samples, opts.hidden, opts.activation, opts.train.seed);
      net.meta.alpha = ds.header.alpha;
      net.meta.dims = ds.header.dims;
      net.meta.encoding = opts.encoding;
      TrainResult tr = train_net(std::move(net), samples, opts.train);
      rep.ok = true;
      rep.validation_loss = tr.net.meta.validation_loss;
      rep.train_loss = tr.train_loss.empty() ? 0.0 : tr.train_loss.back();
      reg.add(std::move(tr.net));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kDivergence && e.kind() != ErrorKind::kInvalidArgument) throw;
      rep.error = e.what();
      spdlog::error("alpha {}: training failed: {}", ds.header.alpha, e.what());
    }
    if (report) report->push_back(rep);
  }
  return reg;
}

}  // namespace deepsel
