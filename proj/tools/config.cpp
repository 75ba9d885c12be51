#include "config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "deepsel/errors.hpp"

namespace deepsel::tools {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& key, const std::string& msg) {
  throw Error(ErrorKind::kConfig, "config: " + key + ": " + msg);
}

/// Walks one JSON object, tracking which keys were consumed.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_, "expected an object");
  }

  ~Section() = default;

  [[nodiscard]] bool has(const std::string& key) const { return j_.contains(key); }
  [[nodiscard]] std::string name(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  template <typename T>
  void read(const std::string& key, T& out) {
    if (!j_.contains(key)) return;
    used_.insert(key);
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      fail(name(key), "wrong type (found " + std::string(j_.at(key).type_name()) + ")");
    }
  }

  template <typename T, typename Parse>
  void read_enum(const std::string& key, T& out, Parse parse) {
    std::string s;
    if (!j_.contains(key)) return;
    read(key, s);
    try {
      out = parse(s);
    } catch (const Error& e) {
      fail(name(key), e.what());
    }
  }

  void read_box(const std::string& key, std::optional<std::pair<double, double>>& out) {
    if (!j_.contains(key)) return;
    used_.insert(key);
    const json& v = j_.at(key);
    if (v.is_null()) {
      out.reset();
      return;
    }
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
      fail(name(key), "expected null or [lower, upper]");
    }
    out = std::make_pair(v[0].get<double>(), v[1].get<double>());
    if (!(out->first <= out->second)) fail(name(key), "lower bound exceeds upper bound");
  }

  const json& sub(const std::string& key) {
    used_.insert(key);
    return j_.at(key);
  }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!used_.contains(k)) fail(name(k), "unknown key");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

void require(bool ok, const std::string& key, const std::string& msg) {
  if (!ok) fail(key, msg);
}

void check_ranges(const ExperimentConfig& c) {
  const auto& h = c.hankel;
  require(h.t_ini >= 1, "hankel.t_ini", "must be >= 1");
  require(h.horizon >= 1, "hankel.horizon", "must be >= 1");
  require(h.trajectories >= 1, "hankel.trajectories", "must be >= 1");
  require(h.length >= h.t_ini + h.horizon, "hankel.length", "must be >= t_ini + horizon");
  require(h.input_amplitude > 0.0, "hankel.input_amplitude", "must be > 0");
  require(h.reset_scale >= 0.0, "hankel.reset_scale", "must be >= 0");

  const auto& d = c.deepc;
  require(!d.q.empty(), "deepc.q", "must not be empty");
  require(!d.r.empty(), "deepc.r", "must not be empty");
  for (double v : d.q) require(v >= 0.0, "deepc.q", "entries must be >= 0");
  for (double v : d.r) require(v >= 0.0, "deepc.r", "entries must be >= 0");
  require(d.lambda_g >= 0.0, "deepc.lambda_g", "must be >= 0");
  require(d.lambda_y >= 0.0, "deepc.lambda_y", "must be >= 0");
  require(!d.slack || d.lambda_y > 0.0, "deepc.lambda_y", "must be > 0 when slack is on");
  require(d.y_box_weight > 0.0, "deepc.y_box_weight", "must be > 0");
  require(d.admm_tol > 0.0, "deepc.admm_tol", "must be > 0");
  require(d.admm_max_iter >= 1, "deepc.admm_max_iter", "must be >= 1");

  const auto& m = c.datamodel;
  require(!m.hidden.empty(), "datamodel.hidden", "must list at least one layer");
  for (Index w : m.hidden) require(w >= 1, "datamodel.hidden", "layer widths must be >= 1");
  require(m.lr >= 0.0, "datamodel.lr", "must be >= 0");
  require(m.epochs >= 0, "datamodel.epochs", "must be >= 0");
  require(m.batch_size >= 1, "datamodel.batch_size", "must be >= 1");
  require(m.lambda_phi >= 0.0, "datamodel.lambda_phi", "must be >= 0");
  require(m.validation_fraction >= 0.0 && m.validation_fraction < 1.0,
          "datamodel.validation_fraction", "must lie in [0, 1)");
  require(!m.alphas.empty(), "datamodel.alphas", "must not be empty");
  for (double a : m.alphas) require(a > 0.0 && a < 1.0, "datamodel.alphas", "entries must lie in (0, 1)");
  require(m.n_train >= 0, "datamodel.n_train", "must be >= 0");
  require(m.t_sim >= h.horizon, "datamodel.t_sim", "must be >= hankel.horizon");
  require(m.k_min >= 0, "datamodel.k_min", "must be >= 0");
  require(m.burn_in >= 0, "datamodel.burn_in", "must be >= 0");
  require(m.relative_delta >= 0.0, "datamodel.relative_delta", "must be >= 0");
  require(m.perturbation_std >= 0.0, "datamodel.perturbation_std", "must be >= 0");
  require(m.setpoint_halfwidth >= 0.0, "datamodel.setpoint_halfwidth", "must be >= 0");
  require(m.threads >= 1, "datamodel.threads", "must be >= 1");

  const auto& b = c.bench;
  require(!b.methods.empty(), "bench.methods", "must not be empty");
  require(!b.k_values.empty(), "bench.k_values", "must not be empty");
  for (Index k : b.k_values) require(k >= 1, "bench.k_values", "entries must be >= 1");
  require(b.seeds >= 1, "bench.seeds", "must be >= 1");
  require(b.t_sim >= 1, "bench.t_sim", "must be >= 1");
  require(b.max_rel_gap >= 0.0, "bench.max_rel_gap", "must be >= 0");
  require(b.threads >= 1, "bench.threads", "must be >= 1");
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kConfig, std::string("config: not valid JSON: ") + e.what());
  }
  ExperimentConfig c;
  Section top(root, "");
  top.read("seed", c.seed);

  if (top.has("plant")) {
    Section s(top.sub("plant"), "plant");
    s.read_enum("kind", c.plant.kind, parse_plant_kind);
    s.read("noise_std", c.plant.noise_std);
    if (s.has("params")) {
      const json& pj = s.sub("params");
      if (!pj.is_object()) fail("plant.params", "expected an object");
      c.plant.params.clear();
      for (const auto& [k, v] : pj.items()) {
        if (!v.is_number()) fail("plant.params." + k, "expected a number");
        c.plant.params[k] = v.get<double>();
      }
    }
    s.finish();
  }
  if (top.has("hankel")) {
    Section s(top.sub("hankel"), "hankel");
    s.read("t_ini", c.hankel.t_ini);
    s.read("horizon", c.hankel.horizon);
    s.read("trajectories", c.hankel.trajectories);
    s.read("length", c.hankel.length);
    s.read("input_amplitude", c.hankel.input_amplitude);
    s.read("reset_scale", c.hankel.reset_scale);
    s.finish();
  }
  if (top.has("deepc")) {
    Section s(top.sub("deepc"), "deepc");
    s.read("q", c.deepc.q);
    s.read("r", c.deepc.r);
    s.read("lambda_g", c.deepc.lambda_g);
    s.read("lambda_y", c.deepc.lambda_y);
    s.read("slack", c.deepc.slack);
    s.read_box("u_box", c.deepc.u_box);
    s.read_box("y_box", c.deepc.y_box);
    s.read("y_box_weight", c.deepc.y_box_weight);
    s.read("admm_tol", c.deepc.admm_tol);
    s.read("admm_max_iter", c.deepc.admm_max_iter);
    s.finish();
  }
  if (top.has("datamodel")) {
    auto& m = c.datamodel;
    Section s(top.sub("datamodel"), "datamodel");
    s.read_enum("encoding", m.encoding, parse_context_encoding);
    s.read("hidden", m.hidden);
    s.read_enum("activation", m.activation, parse_activation);
    s.read("lr", m.lr);
    s.read("epochs", m.epochs);
    s.read("batch_size", m.batch_size);
    s.read("lambda_phi", m.lambda_phi);
    s.read("validation_fraction", m.validation_fraction);
    s.read("alphas", m.alphas);
    s.read("n_train", m.n_train);
    s.read("t_sim", m.t_sim);
    s.read("k_min", m.k_min);
    s.read_enum("init_dist", m.init_dist, parse_initial_distribution);
    s.read_enum("ref_strategy", m.ref_strategy, parse_reference_strategy);
    s.read("burn_in", m.burn_in);
    s.read("relative_delta", m.relative_delta);
    s.read("perturbation_std", m.perturbation_std);
    s.read("setpoint_halfwidth", m.setpoint_halfwidth);
    s.read("primitive_amplitude", m.primitive_amplitude);
    s.read("threads", m.threads);
    s.finish();
  }
  if (top.has("bench")) {
    auto& b = c.bench;
    Section s(top.sub("bench"), "bench");
    if (s.has("methods")) {
      std::vector<std::string> names;
      s.read("methods", names);
      b.methods.clear();
      for (const auto& n : names) {
        try {
          b.methods.push_back(parse_bench_method(n));
        } catch (const Error& e) {
          fail("bench.methods", e.what());
        }
      }
    }
    s.read("k_values", b.k_values);
    s.read("seeds", b.seeds);
    s.read("t_sim", b.t_sim);
    s.read_enum("scenario", b.scenario, parse_reference_strategy);
    s.read("record_step_time", b.record_step_time);
    s.read("max_rel_gap", b.max_rel_gap);
    s.read("threads", b.threads);
    s.finish();
  }
  top.finish();
  check_ranges(c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string dump_config(const ExperimentConfig& c) {
  auto box = [](const std::optional<std::pair<double, double>>& b) {
    return b ? ordered_json::array({b->first, b->second}) : ordered_json(nullptr);
  };
  PlantParams params = default_plant_params(c.plant.kind);
  for (const auto& [k, v] : c.plant.params) params[k] = v;

  ordered_json j;
  j["seed"] = c.seed;
  ordered_json pj;
  pj["kind"] = std::string(to_string(c.plant.kind));
  pj["params"] = ordered_json(params);
  pj["noise_std"] = c.plant.noise_std;
  j["plant"] = pj;
  j["hankel"] = {{"t_ini", c.hankel.t_ini},
                 {"horizon", c.hankel.horizon},
                 {"trajectories", c.hankel.trajectories},
                 {"length", c.hankel.length},
                 {"input_amplitude", c.hankel.input_amplitude},
                 {"reset_scale", c.hankel.reset_scale}};
  j["deepc"] = {{"q", c.deepc.q},
                {"r", c.deepc.r},
                {"lambda_g", c.deepc.lambda_g},
                {"lambda_y", c.deepc.lambda_y},
                {"slack", c.deepc.slack},
                {"u_box", box(c.deepc.u_box)},
                {"y_box", box(c.deepc.y_box)},
                {"y_box_weight", c.deepc.y_box_weight},
                {"admm_tol", c.deepc.admm_tol},
                {"admm_max_iter", c.deepc.admm_max_iter}};
  const auto& m = c.datamodel;
  j["datamodel"] = {{"encoding", std::string(to_string(m.encoding))},
                    {"hidden", m.hidden},
                    {"activation", std::string(to_string(m.activation))},
                    {"lr", m.lr},
                    {"epochs", m.epochs},
                    {"batch_size", m.batch_size},
                    {"lambda_phi", m.lambda_phi},
                    {"validation_fraction", m.validation_fraction},
                    {"alphas", m.alphas},
                    {"n_train", m.n_train},
                    {"t_sim", m.t_sim},
                    {"k_min", m.k_min},
                    {"init_dist", std::string(to_string(m.init_dist))},
                    {"ref_strategy", std::string(to_string(m.ref_strategy))},
                    {"burn_in", m.burn_in},
                    {"relative_delta", m.relative_delta},
                    {"perturbation_std", m.perturbation_std},
                    {"setpoint_halfwidth", m.setpoint_halfwidth},
                    {"primitive_amplitude", m.primitive_amplitude},
                    {"threads", m.threads}};
  std::vector<std::string> methods;
  for (BenchMethod bm : c.bench.methods) methods.emplace_back(to_string(bm));
  j["bench"] = {{"methods", methods},
                {"k_values", c.bench.k_values},
                {"seeds", c.bench.seeds},
                {"t_sim", c.bench.t_sim},
                {"scenario", std::string(to_string(c.bench.scenario))},
                {"record_step_time", c.bench.record_step_time},
                {"max_rel_gap", c.bench.max_rel_gap},
                {"threads", c.bench.threads}};
  return j.dump(2) + "\n";
}

PlantModel build_plant(const ExperimentConfig& cfg) {
  try {
    return make_plant(cfg.plant.kind, cfg.plant.params);
  } catch (const Error& e) {
    fail("plant.params", e.what());
  }
}

void validate_config(const ExperimentConfig& cfg) {
  check_ranges(cfg);
  const PlantModel plant = build_plant(cfg);
  const Index m = plant.input_dim();
  const Index p = plant.output_dim();
  auto dim_ok = [](std::size_t n, Index d) { return n == 1 || static_cast<Index>(n) == d; };
  require(dim_ok(cfg.deepc.q.size(), p), "deepc.q", "needs 1 or p=" + std::to_string(p) + " entries");
  require(dim_ok(cfg.deepc.r.size(), m), "deepc.r", "needs 1 or m=" + std::to_string(m) + " entries");
  require(cfg.plant.noise_std.empty() || dim_ok(cfg.plant.noise_std.size(), p), "plant.noise_std",
          "needs 0, 1 or p=" + std::to_string(p) + " entries");
  for (double v : cfg.plant.noise_std) require(v >= 0.0, "plant.noise_std", "entries must be >= 0");
}

DeepcConfig build_deepc(const ExperimentConfig& cfg, Index input_dim, Index output_dim) {
  auto diag = [](const std::vector<double>& v, Index d) {
    Vec out(d);
    for (Index i = 0; i < d; ++i) out(i) = v.size() == 1 ? v[0] : v[static_cast<std::size_t>(i)];
    return Mat(out.asDiagonal());
  };
  DeepcConfig d;
  d.Q = diag(cfg.deepc.q, output_dim);
  d.R = diag(cfg.deepc.r, input_dim);
  d.lambda_g = cfg.deepc.lambda_g;
  d.lambda_y = cfg.deepc.slack ? cfg.deepc.lambda_y : 0.0;
  if (cfg.deepc.u_box) {
    d.u_box = ChannelBox{Vec::Constant(input_dim, cfg.deepc.u_box->first),
                         Vec::Constant(input_dim, cfg.deepc.u_box->second)};
  }
  if (cfg.deepc.y_box) {
    d.y_box = ChannelBox{Vec::Constant(output_dim, cfg.deepc.y_box->first),
                         Vec::Constant(output_dim, cfg.deepc.y_box->second)};
  }
  d.y_box_weight = cfg.deepc.y_box_weight;
  d.admm_tol = cfg.deepc.admm_tol;
  d.admm_max_iter = cfg.deepc.admm_max_iter;
  validate(d, input_dim, output_dim);
  return d;
}

ReferenceConfig build_reference(const ExperimentConfig& cfg, ReferenceStrategy) {
  const auto& m = cfg.datamodel;
  ReferenceConfig r;
  r.setpoint_lower = Vec::Constant(1, -m.setpoint_halfwidth);
  r.setpoint_upper = Vec::Constant(1, m.setpoint_halfwidth);
  r.perturbation_std = Vec::Constant(1, m.perturbation_std);
  r.primitive_amplitude = m.primitive_amplitude;
  r.relative_delta = Vec::Constant(1, m.relative_delta);
  return r;
}

std::vector<std::uint64_t> bench_seeds(const ExperimentConfig& cfg) {
  std::vector<std::uint64_t> seeds;
  for (Index s = 0; s < cfg.bench.seeds; ++s) {
    seeds.push_back(derive_seed(cfg.seed, static_cast<std::uint64_t>(s), StreamPurpose::kScenario));
  }
  return seeds;
}

}  // namespace deepsel::tools
