#include "commands.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>

#include <spdlog/spdlog.h>

#include "deepsel/errors.hpp"
#include "deepsel/grid.hpp"
#include "deepsel/rng.hpp"
#include "deepsel/trajectory_io.hpp"

namespace deepsel::tools {
namespace fs = std::filesystem;
namespace {

void refuse_overwrite(const fs::path& path, bool force) {
  if (!force && fs::exists(path)) {
    throw Error(ErrorKind::kIo, path.string() + " exists; pass --force to overwrite");
  }
}

NoiseSpec noise_of(const ExperimentConfig& cfg) {
  NoiseSpec n;
  if (!cfg.plant.noise_std.empty()) {
    n.output_noise_std = Eigen::Map<const Vec>(cfg.plant.noise_std.data(),
                                               static_cast<Index>(cfg.plant.noise_std.size()));
  }
  return n;
}

InitialSamplerConfig initial_of(const ExperimentConfig& cfg,
                                const std::vector<ArchivedTrajectory>& archive) {
  InitialSamplerConfig ic;
  ic.burn_in = cfg.datamodel.burn_in;
  ic.input_amplitude = cfg.hankel.input_amplitude;
  ic.reset_scale = cfg.hankel.reset_scale;
  ic.archive = archive;
  return ic;
}

std::ostream* sink(const CommandOptions& o) { return o.out; }

}  // namespace

fs::path dataset_name(double alpha) { return "dataset_a" + format_double(alpha) + ".jsonl"; }
fs::path model_name(double alpha) { return "model_a" + format_double(alpha) + ".json"; }

HankelSet load_hankel(const ExperimentConfig& cfg, const fs::path& traj_dir) {
  const auto archive = load_trajectory_dir(traj_dir);
  if (archive.empty()) throw Error(ErrorKind::kIo, "no trajectories in " + traj_dir.string());
  std::vector<Trajectory> trajs;
  for (const auto& a : archive) trajs.push_back(a.traj);
  return build_hankel(trajs, cfg.hankel.t_ini, cfg.hankel.horizon);
}

int cmd_collect(const ExperimentConfig& cfg, const fs::path& out_dir, const CommandOptions& opts) {
  validate_config(cfg);
  const PlantModel plant = build_plant(cfg);
  fs::create_directories(out_dir);
  const Index n = cfg.hankel.trajectories;
  std::vector<Trajectory> trajs;
  for (Index i = 0; i < n; ++i) {
    char stem[32];
    std::snprintf(stem, sizeof stem, "traj_%03lld", static_cast<long long>(i));
    const fs::path csv = out_dir / (std::string(stem) + ".csv");
    const fs::path meta_path = out_dir / (std::string(stem) + ".meta");
    refuse_overwrite(csv, opts.force);
    refuse_overwrite(meta_path, opts.force);

    const std::uint64_t seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(i),
                                           StreamPurpose::kCollection);
    Rng rng(seed);
    const Vec x0 = random_reset(plant, cfg.hankel.reset_scale, rng);
    const Mat inputs = random_inputs(plant, cfg.hankel.length, cfg.hankel.input_amplitude, rng);
    NoiseSpec noise = noise_of(cfg);
    noise.seed = derive_seed(seed, 0, StreamPurpose::kNoise);
    const RolloutResult rr = simulate(plant, x0, inputs, noise);

    TrajectoryMeta meta;
    meta.input_dim = plant.input_dim();
    meta.output_dim = plant.output_dim();
    meta.dt = plant.dt();
    meta.seed = seed;
    meta.initial_state = x0;
    meta.extra["plant"] = std::string(to_string(cfg.plant.kind));
    write_trajectory_csv(csv, rr.traj);
    write_trajectory_meta(meta_path, meta);
    trajs.push_back(rr.traj);
  }
  const HankelSet h = build_hankel(trajs, cfg.hankel.t_ini, cfg.hankel.horizon);
  const Index rank = excitation_rank(h);
  if (auto* out = sink(opts)) {
    *out << "wrote " << n << " trajectories to " << out_dir.string() << '\n'
         << "hankel: depth " << h.depth() << ", columns M=" << h.columns()
         << ", excitation rank " << rank << " (m*L=" << h.input_dim * (h.t_ini + h.horizon)
         << ")\n";
  }
  return 0;
}

int cmd_gendata(const ExperimentConfig& cfg, const fs::path& traj_dir, const fs::path& out_file,
                double alpha, const CommandOptions& opts) {
  validate_config(cfg);
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw Error(ErrorKind::kConfig, "alpha must lie in (0, 1)");
  }
  refuse_overwrite(out_file, opts.force);
  const PlantModel plant = build_plant(cfg);
  const auto archive = load_trajectory_dir(traj_dir);
  if (archive.empty()) throw Error(ErrorKind::kIo, "no trajectories in " + traj_dir.string());
  std::vector<Trajectory> trajs;
  for (const auto& a : archive) trajs.push_back(a.traj);
  const HankelSet h = build_hankel(trajs, cfg.hankel.t_ini, cfg.hankel.horizon);
  if (h.input_dim != plant.input_dim() || h.output_dim != plant.output_dim()) {
    throw Error(ErrorKind::kDimensionMismatch, "trajectories do not match the configured plant");
  }

  GenerationSetup setup;
  setup.plant = &plant;
  setup.hankel = &h;
  setup.spec.init_dist = cfg.datamodel.init_dist;
  setup.spec.ref_strategy = cfg.datamodel.ref_strategy;
  setup.spec.alpha = alpha;
  setup.spec.t_sim = cfg.datamodel.t_sim;
  setup.initial = initial_of(cfg, archive);
  setup.reference = build_reference(cfg, cfg.datamodel.ref_strategy);
  setup.deepc = build_deepc(cfg, plant.input_dim(), plant.output_dim());
  setup.noise = noise_of(cfg);
  setup.k_min = cfg.datamodel.k_min;
  setup.threads = cfg.datamodel.threads;
  const std::size_t step = std::max<std::size_t>(1, static_cast<std::size_t>(cfg.datamodel.n_train) / 10);
  setup.progress = [step](std::size_t done, std::size_t total) {
    if (done % step == 0 || done == total) spdlog::info("gendata: {}/{} samples", done, total);
  };

  const Dataset ds = generate_dataset(setup, cfg.datamodel.n_train, cfg.seed);
  if (out_file.has_parent_path()) fs::create_directories(out_file.parent_path());
  write_dataset(out_file, ds);

  if (auto* out = sink(opts)) {
    Index infeasible = 0, diverged = 0, resamples = 0;
    double popcount = 0.0;
    for (const auto& s : ds.samples) {
      infeasible += s.status == SampleStatus::kInfeasible;
      diverged += s.status == SampleStatus::kDiverged;
      resamples += s.resamples;
      popcount += static_cast<double>(s.s.popcount());
    }
    const double n = std::max<double>(1.0, static_cast<double>(ds.samples.size()));
    *out << "wrote " << ds.samples.size() << " samples to " << out_file.string() << '\n'
         << "M=" << h.columns() << " alpha=" << alpha << " mean popcount " << popcount / n
         << " (expected " << alpha * static_cast<double>(h.columns()) << ")\n"
         << "infeasible " << infeasible << ", diverged " << diverged << ", resampled "
         << resamples << ", penalty " << ds.header.penalty << '\n';
  }
  return 0;
}

int cmd_train(const ExperimentConfig& cfg, const std::vector<fs::path>& datasets,
              const fs::path& out_dir, const CommandOptions& opts) {
  validate_config(cfg);
  if (datasets.empty()) throw Error(ErrorKind::kInvalidArgument, "no dataset files given");
  const PlantModel plant = build_plant(cfg);
  const ContextDims want{plant.input_dim(), plant.output_dim(), cfg.hankel.t_ini,
                         cfg.hankel.horizon};
  std::vector<Dataset> loaded;
  for (const auto& path : datasets) {
    Dataset ds = read_dataset(path);
    if (!(ds.header.dims == want)) {
      throw Error(ErrorKind::kDimensionMismatch,
                  path.string() + ": header dims (m=" + std::to_string(ds.header.dims.input_dim) +
                      ", p=" + std::to_string(ds.header.dims.output_dim) +
                      ", t_ini=" + std::to_string(ds.header.dims.t_ini) +
                      ", horizon=" + std::to_string(ds.header.dims.horizon) +
                      ") disagree with the config");
    }
    refuse_overwrite(out_dir / model_name(ds.header.alpha), opts.force);
    loaded.push_back(std::move(ds));
  }

  EnsembleOptions eo;
  eo.hidden = cfg.datamodel.hidden;
  eo.activation = cfg.datamodel.activation;
  eo.encoding = cfg.datamodel.encoding;
  eo.train.lr = cfg.datamodel.lr;
  eo.train.epochs = cfg.datamodel.epochs;
  eo.train.batch_size = cfg.datamodel.batch_size;
  eo.train.lambda_phi = cfg.datamodel.lambda_phi;
  eo.train.validation_fraction = cfg.datamodel.validation_fraction;
  eo.train.seed = derive_seed(cfg.seed, 0, StreamPurpose::kInit);

  std::vector<EnsembleReport> report;
  const ModelRegistry reg = train_alpha_ensemble(loaded, eo, &report);
  fs::create_directories(out_dir);
  for (const auto& [alpha, net] : reg.models()) save_model(out_dir / model_name(alpha), net);

  bool all_ok = true;
  if (auto* out = sink(opts)) {
    *out << std::left << std::setw(10) << "alpha" << std::setw(16) << "train_loss"
         << std::setw(16) << "val_loss" << "status\n";
  }
  for (const auto& r : report) {
    all_ok = all_ok && r.ok;
    if (auto* out = sink(opts)) {
      *out << std::left << std::setw(10) << r.alpha << std::setw(16) << r.train_loss
           << std::setw(16) << r.validation_loss << (r.ok ? "ok" : "failed: " + r.error) << '\n';
    }
  }
  return all_ok ? 0 : kExitPartialFailure;
}

int cmd_bench(const ExperimentConfig& cfg, const fs::path& traj_dir,
              const std::optional<fs::path>& model_dir, const fs::path& out_csv,
              const CommandOptions& opts) {
  validate_config(cfg);
  fs::path tsv = out_csv;
  tsv.replace_extension(".tsv");
  fs::path dat = out_csv;
  dat.replace_extension(".dat");
  for (const auto& p : {out_csv, tsv, dat}) refuse_overwrite(p, opts.force);

  const PlantModel plant = build_plant(cfg);
  const auto archive = load_trajectory_dir(traj_dir);
  if (archive.empty()) throw Error(ErrorKind::kIo, "no trajectories in " + traj_dir.string());
  std::vector<Trajectory> trajs;
  for (const auto& a : archive) trajs.push_back(a.traj);
  const HankelSet h = build_hankel(trajs, cfg.hankel.t_ini, cfg.hankel.horizon);

  ExperimentGrid grid;
  grid.methods = cfg.bench.methods;
  grid.k_values = cfg.bench.k_values;
  grid.seeds = bench_seeds(cfg);
  grid.plant = &plant;
  grid.hankel = &h;
  grid.deepc = build_deepc(cfg, plant.input_dim(), plant.output_dim());
  grid.t_sim = cfg.bench.t_sim;
  grid.scenario.init_dist = cfg.datamodel.init_dist;
  grid.scenario.ref_strategy = cfg.bench.scenario;
  grid.scenario.t_sim = cfg.bench.t_sim;
  grid.initial = initial_of(cfg, archive);
  grid.reference = build_reference(cfg, cfg.bench.scenario);
  grid.noise = noise_of(cfg);
  grid.record_step_time = cfg.bench.record_step_time;
  grid.max_rel_gap = cfg.bench.max_rel_gap;
  grid.threads = cfg.bench.threads;

  std::optional<ModelRegistry> registry;
  const bool need_models = std::find(grid.methods.begin(), grid.methods.end(),
                                     BenchMethod::kDatamodel) != grid.methods.end();
  if (need_models) {
    if (!model_dir) throw Error(ErrorKind::kMissingModel, "datamodel method needs --models");
    registry = ModelRegistry::load_dir(*model_dir);
    for (Index k : grid.k_values) (void)registry->select_for(k, grid.max_rel_gap);
  }

  const auto rows = run_grid(grid, registry ? &*registry : nullptr);
  const auto agg = aggregate(rows);
  if (out_csv.has_parent_path()) fs::create_directories(out_csv.parent_path());
  write_results_csv(out_csv, rows);
  write_aggregate_tsv(tsv, agg);
  write_gnuplot_dat(dat, agg);
  if (auto* out = sink(opts)) *out << format_report(agg);

  const bool any_aborted =
      std::any_of(rows.begin(), rows.end(), [](const GridRow& r) { return r.aborted; });
  return any_aborted ? kExitPartialFailure : 0;
}

int cmd_report(const fs::path& results_csv, std::ostream& out) {
  out << format_report(aggregate(read_results_csv(results_csv)));
  return 0;
}

int cmd_config(const fs::path& out_file, const CommandOptions& opts) {
  refuse_overwrite(out_file, opts.force);
  std::ofstream f(out_file, std::ios::binary);
  if (!f) throw Error(ErrorKind::kIo, "cannot open " + out_file.string() + " for writing");
  f << dump_config(ExperimentConfig{});
  if (!f) throw Error(ErrorKind::kIo, "write failed for " + out_file.string());
  return 0;
}

}  // namespace deepsel::tools
