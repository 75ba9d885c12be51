#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "commands.hpp"
#include "deepsel/errors.hpp"

namespace fs = std::filesystem;
using namespace deepsel;
using namespace deepsel::tools;

namespace {

void init_logging() {
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::info);
  if (const char* env = std::getenv("DEEPSEL_LOG_LEVEL")) {
    const auto level = spdlog::level::from_str(env);
    if (level == spdlog::level::off && std::string(env) != "off") {
      std::cerr << "ignoring unknown DEEPSEL_LOG_LEVEL '" << env << "'\n";
    } else {
      spdlog::set_level(level);
    }
  }
}

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<Index> n_train;
  std::optional<unsigned> threads;
};

ExperimentConfig load_with(const std::string& path, const Overrides& o) {
  ExperimentConfig cfg = path.empty() ? ExperimentConfig{} : load_config(path);
  if (o.seed) cfg.seed = *o.seed;
  if (o.n_train) cfg.datamodel.n_train = *o.n_train;
  if (o.threads) cfg.datamodel.threads = cfg.bench.threads = *o.threads;
  validate_config(cfg);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  init_logging();
  CLI::App app{"deepsel: DeePC with learned column selection"};
  app.require_subcommand(1);

  std::string config_path;
  bool force = false;
  Overrides ov;
  auto common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", config_path, "experiment config (JSON)")->check(CLI::ExistingFile);
    sub->add_flag("-f,--force", force, "overwrite existing outputs");
    sub->add_option("--seed", ov.seed, "override the master seed");
    sub->add_option("--threads", ov.threads, "override worker threads");
  };

  std::string out;
  std::string traj_dir;
  std::string model_dir;
  std::optional<double> alpha;
  std::vector<std::string> datasets;

  auto* config = app.add_subcommand("config", "write the default config");
  config->add_option("-o,--out", out, "output file")->required();
  config->add_flag("-f,--force", force, "overwrite existing outputs");

  auto* collect = app.add_subcommand("collect", "record random-input trajectories");
  common(collect);
  collect->add_option("-o,--out", out, "trajectory directory")->required();

  auto* gendata = app.add_subcommand("gendata", "generate a datamodel training set");
  common(gendata);
  gendata->add_option("-t,--traj", traj_dir, "trajectory directory")->required()->check(CLI::ExistingDirectory);
  gendata->add_option("-o,--out", out,
                      "dataset file, or a directory when --alpha is omitted (one file per alpha)")
      ->required();
  gendata->add_option("-a,--alpha", alpha, "inclusion probability");
  gendata->add_option("--n-train", ov.n_train, "override the number of samples");

  auto* train = app.add_subcommand("train", "train one network per dataset");
  common(train);
  train->add_option("datasets", datasets, "dataset files")->required()->check(CLI::ExistingFile);
  train->add_option("-o,--out", out, "model directory")->required();

  auto* bench = app.add_subcommand("bench", "run the cost-versus-K grid");
  common(bench);
  bench->add_option("-t,--traj", traj_dir, "trajectory directory")->required()->check(CLI::ExistingDirectory);
  bench->add_option("-m,--models", model_dir, "model directory")->check(CLI::ExistingDirectory);
  bench->add_option("-o,--out", out, "results CSV")->required();

  auto* report = app.add_subcommand("report", "summarize a results CSV");
  std::string results;
  report->add_option("results", results, "results CSV")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    CommandOptions opts{force, &std::cout};
    if (*config) return cmd_config(out, opts);
    if (*report) return cmd_report(results, std::cout);
    const ExperimentConfig cfg = load_with(config_path, ov);
    if (*collect) return cmd_collect(cfg, out, opts);
    if (*gendata) {
      if (alpha) return cmd_gendata(cfg, traj_dir, out, *alpha, opts);
      for (double a : cfg.datamodel.alphas) {
        if (const int rc = cmd_gendata(cfg, traj_dir, fs::path(out) / dataset_name(a), a, opts)) {
          return rc;
        }
      }
      return 0;
    }
    if (*train) {
      std::vector<fs::path> paths(datasets.begin(), datasets.end());
      return cmd_train(cfg, paths, out, opts);
    }
    if (*bench) {
      std::optional<fs::path> models;
      if (!model_dir.empty()) models = model_dir;
      return cmd_bench(cfg, traj_dir, models, out, opts);
    }
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.kind()) << "]: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
