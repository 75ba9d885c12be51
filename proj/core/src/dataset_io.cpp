#include <fstream>
#include <string>

#include <json.hpp>

#include "deepsel/errors.hpp"
#include "deepsel/pipeline.hpp"

namespace deepsel {
namespace {

using nlohmann::ordered_json;

constexpr const char* kDatasetFormat = "deepsel-dataset";
constexpr int kDatasetVersion = 1;

ordered_json to_json(const Vec& v) {
  return ordered_json(std::vector<double>(v.data(), v.data() + v.size()));
}

Vec vec_from(const ordered_json& j, Index expected, const std::string& what) {
  const auto values = j.get<std::vector<double>>();
  if (static_cast<Index>(values.size()) != expected) {
    throw Error(ErrorKind::kFormat, what + " has " + std::to_string(values.size()) +
                                        " entries, expected " + std::to_string(expected));
  }
  return Eigen::Map<const Vec>(values.data(), expected);
}

}  // namespace

void write_dataset(const std::filesystem::path& path, const Dataset& ds) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot open " + path.string() + " for writing");
  const auto& h = ds.header;
  ordered_json head;
  head["format"] = kDatasetFormat;
  head["version"] = kDatasetVersion;
  head["m"] = h.dims.input_dim;
  head["p"] = h.dims.output_dim;
  head["t_ini"] = h.dims.t_ini;
  head["horizon"] = h.dims.horizon;
  head["columns"] = h.columns;
  head["alpha"] = h.alpha;
  head["t_sim"] = h.t_sim;
  head["master_seed"] = h.master_seed;
  head["penalty"] = h.penalty;
  head["samples"] = ds.samples.size();
  out << head.dump() << '\n';
  for (const auto& s : ds.samples) {
    ordered_json rec;
    rec["i"] = s.index;
    rec["u_ini"] = to_json(s.u_ini);
    rec["y_ini"] = to_json(s.y_ini);
    rec["r"] = to_json(s.r);
    rec["s"] = s.s.to_hex();
    rec["J"] = s.cost;
    rec["status"] = std::string(to_string(s.status));
    rec["seed"] = s.seed;
    rec["t_sim"] = s.t_sim;
    rec["alpha"] = s.alpha;
    rec["resamples"] = s.resamples;
    rec["infeasible_steps"] = s.infeasible_steps;
    out << rec.dump() << '\n';
  }
  if (!out) throw Error(ErrorKind::kIo, "write failed for " + path.string());
}

Dataset read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  Dataset ds;
  std::string line;
  std::size_t line_no = 0;
  std::size_t expected = 0;
  try {
    if (!std::getline(in, line)) throw Error(ErrorKind::kFormat, path.string() + ": empty file");
    ++line_no;
    const auto head = ordered_json::parse(line);
    if (head.at("format") != kDatasetFormat) {
      throw Error(ErrorKind::kFormat, path.string() + ": not a deepsel dataset");
    }
    if (head.at("version").get<int>() != kDatasetVersion) {
      throw Error(ErrorKind::kFormat, path.string() + ": unsupported dataset version");
    }
    auto& h = ds.header;
    h.dims = {head.at("m").get<Index>(), head.at("p").get<Index>(),
              head.at("t_ini").get<Index>(), head.at("horizon").get<Index>()};
    h.columns = head.at("columns").get<Index>();
    h.alpha = head.at("alpha").get<double>();
    h.t_sim = head.at("t_sim").get<Index>();
    h.master_seed = head.at("master_seed").get<std::uint64_t>();
    h.penalty = head.at("penalty").get<double>();
    expected = head.at("samples").get<std::size_t>();
    ds.samples.reserve(expected);

    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      const auto rec = ordered_json::parse(line);
      TrainingSample s;
      s.index = rec.at("i").get<Index>();
      s.u_ini = vec_from(rec.at("u_ini"), h.dims.input_dim * h.dims.t_ini, "u_ini");
      s.y_ini = vec_from(rec.at("y_ini"), h.dims.output_dim * h.dims.t_ini, "y_ini");
      s.r = vec_from(rec.at("r"), h.dims.output_dim * h.dims.horizon, "r");
      s.s = IndicatorVector::from_hex(rec.at("s").get<std::string>(), h.columns);
      s.cost = rec.at("J").get<double>();
      s.status = parse_sample_status(rec.at("status").get<std::string>());
      s.seed = rec.at("seed").get<std::uint64_t>();
      s.t_sim = rec.at("t_sim").get<Index>();
      s.alpha = rec.at("alpha").get<double>();
      s.resamples = rec.at("resamples").get<int>();
      s.infeasible_steps = rec.at("infeasible_steps").get<Index>();
      ds.samples.push_back(std::move(s));
    }
  } catch (const ordered_json::exception& e) {
    throw Error(ErrorKind::kFormat,
                path.string() + ":" + std::to_string(line_no) + ": " + e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kFormat) throw;
    throw Error(ErrorKind::kFormat,
                path.string() + ":" + std::to_string(line_no) + ": " + e.what());
  }
  if (ds.samples.size() != expected) {
    throw Error(ErrorKind::kFormat, path.string() + ": header announces " +
                                        std::to_string(expected) + " samples, found " +
                                        std::to_string(ds.samples.size()));
  }
  return ds;
}

}  // namespace deepsel
