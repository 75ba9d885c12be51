#include <fstream>
#include <string>

#include <json.hpp>

#include "deepsel/context_net.hpp"
#include "deepsel/errors.hpp"

namespace deepsel {
namespace {

using nlohmann::json;

constexpr const char* kModelFormat = "deepsel-context-net";
constexpr int kModelVersion = 1;

json to_json(const Vec& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

Vec vec_from(const json& j, Index expected, const std::string& what) {
  const auto values = j.get<std::vector<double>>();
  if (static_cast<Index>(values.size()) != expected) {
    throw Error(ErrorKind::kFormat, what + " has " + std::to_string(values.size()) +
                                        " entries, expected " + std::to_string(expected));
  }
  return Eigen::Map<const Vec>(values.data(), expected);
}

}  // namespace

void save_model(const std::filesystem::path& path, const ContextNet& net) {
  json j;
  j["format"] = kModelFormat;
  j["version"] = kModelVersion;
  j["activation"] = std::string(to_string(net.activation()));
  j["layer_sizes"] = net.layer_sizes();
  j["alpha"] = net.meta.alpha;
  j["columns"] = net.columns();
  j["encoding"] = std::string(to_string(net.meta.encoding));
  j["dims"] = {{"m", net.meta.dims.input_dim},
               {"p", net.meta.dims.output_dim},
               {"t_ini", net.meta.dims.t_ini},
               {"horizon", net.meta.dims.horizon}};
  j["init_seed"] = net.meta.init_seed;
  j["validation_loss"] = net.meta.validation_loss;
  j["input_mean"] = to_json(net.input_mean());
  j["input_scale"] = to_json(net.input_scale());
  json layers = json::array();
  for (std::size_t l = 0; l < net.layers(); ++l) {
    const Mat& w = net.weights()[l];
    std::vector<double> row_major;
    row_major.reserve(static_cast<std::size_t>(w.size()));
    for (Index r = 0; r < w.rows(); ++r) {
      for (Index c = 0; c < w.cols(); ++c) row_major.push_back(w(r, c));
    }
    layers.push_back({{"rows", w.rows()},
                      {"cols", w.cols()},
                      {"weights", row_major},
                      {"bias", to_json(net.biases()[l])}});
  }
  j["layers"] = std::move(layers);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot open " + path.string() + " for writing");
  out << j.dump(1) << '\n';
  if (!out) throw Error(ErrorKind::kIo, "write failed for " + path.string());
}

ContextNet load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kFormat, path.string() + ": " + e.what());
  }
  try {
    if (j.at("format") != kModelFormat) {
      throw Error(ErrorKind::kFormat, path.string() + ": not a deepsel model file");
    }
    if (j.at("version").get<int>() != kModelVersion) {
      throw Error(ErrorKind::kFormat, path.string() + ": unsupported model version");
    }
    const auto sizes = j.at("layer_sizes").get<std::vector<Index>>();
    ContextNet net(sizes, parse_activation(j.at("activation").get<std::string>()), 0);
    const auto& layers = j.at("layers");
    if (layers.size() != net.layers()) {
      throw Error(ErrorKind::kFormat, path.string() + ": layer count mismatch");
    }
    for (std::size_t l = 0; l < net.layers(); ++l) {
      Mat& w = net.weights()[l];
      const auto& lj = layers[l];
      if (lj.at("rows").get<Index>() != w.rows() || lj.at("cols").get<Index>() != w.cols()) {
        throw Error(ErrorKind::kFormat, path.string() + ": layer " + std::to_string(l) +
                                            " shape disagrees with layer_sizes");
      }
      const auto vals = lj.at("weights").get<std::vector<double>>();
      if (static_cast<Index>(vals.size()) != w.size()) {
        throw Error(ErrorKind::kFormat, path.string() + ": layer " + std::to_string(l) +
                                            " has wrong weight count");
      }
      std::size_t k = 0;
      for (Index r = 0; r < w.rows(); ++r) {
        for (Index c = 0; c < w.cols(); ++c) w(r, c) = vals[k++];
      }
      net.biases()[l] = vec_from(lj.at("bias"), w.rows(), "bias");
    }
    net.set_standardization(vec_from(j.at("input_mean"), net.input_dim(), "input_mean"),
                            vec_from(j.at("input_scale"), net.input_dim(), "input_scale"));
    net.meta.alpha = j.at("alpha").get<double>();
    net.meta.encoding = parse_context_encoding(j.at("encoding").get<std::string>());
    const auto& d = j.at("dims");
    net.meta.dims = {d.at("m").get<Index>(), d.at("p").get<Index>(), d.at("t_ini").get<Index>(),
                     d.at("horizon").get<Index>()};
    net.meta.init_seed = j.at("init_seed").get<std::uint64_t>();
    net.meta.validation_loss = j.at("validation_loss").get<double>();
    if (j.at("columns").get<Index>() != net.columns()) {
      throw Error(ErrorKind::kFormat, path.string() + ": 'columns' disagrees with output layer");
    }
    return net;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kFormat, path.string() + ": " + e.what());
  }
}

}  // namespace deepsel
