#include "deepsel/trajectory_io.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <sstream>

#include "deepsel/errors.hpp"

namespace deepsel {
namespace fs = std::filesystem;

std::string format_double(double value) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc{}) throw Error(ErrorKind::kFormat, "cannot format double");
  return std::string(buf.data(), ptr);
}

namespace {

double parse_double(const std::string& text, const std::string& where) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last) {
    throw Error(ErrorKind::kFormat, where + ": cannot parse number '" + text + "'");
  }
  return v;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

void write_trajectory_csv(const fs::path& path, const Trajectory& traj) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot open " + path.string() + " for writing");
  const Index m = traj.input_dim();
  const Index p = traj.output_dim();
  out << "k";
  for (Index i = 0; i < m; ++i) out << ",u_" << i;
  for (Index i = 0; i < p; ++i) out << ",y_" << i;
  out << '\n';
  for (Index k = 0; k < traj.length(); ++k) {
    out << k;
    for (Index i = 0; i < m; ++i) out << ',' << format_double(traj.inputs()(k, i));
    for (Index i = 0; i < p; ++i) out << ',' << format_double(traj.outputs()(k, i));
    out << '\n';
  }
  if (!out) throw Error(ErrorKind::kIo, "write failed for " + path.string());
}

Trajectory read_trajectory_csv(const fs::path& path, double dt) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::kFormat, path.string() + ": empty file");
  const auto header = split(trim(line), ',');
  if (header.empty() || header[0] != "k") {
    throw Error(ErrorKind::kFormat, path.string() + ": header must start with 'k'");
  }
  Index m = 0;
  Index p = 0;
  for (std::size_t i = 1; i < header.size(); ++i) {
    const std::string expect_u = "u_" + std::to_string(m);
    const std::string expect_y = "y_" + std::to_string(p);
    if (p == 0 && header[i] == expect_u) {
      ++m;
    } else if (header[i] == expect_y) {
      ++p;
    } else {
      throw Error(ErrorKind::kFormat,
                  path.string() + ": unexpected header column '" + header[i] + "'");
    }
  }
  std::vector<std::vector<double>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != header.size()) {
      throw Error(ErrorKind::kFormat, path.string() + ":" + std::to_string(lineno) +
                                          ": expected " + std::to_string(header.size()) +
                                          " fields");
    }
    std::vector<double> row;
    row.reserve(cells.size() - 1);
    const std::string where = path.string() + ":" + std::to_string(lineno);
    for (std::size_t i = 1; i < cells.size(); ++i) row.push_back(parse_double(cells[i], where));
    rows.push_back(std::move(row));
  }
  Mat u(static_cast<Index>(rows.size()), m);
  Mat y(static_cast<Index>(rows.size()), p);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    for (Index i = 0; i < m; ++i) u(static_cast<Index>(k), i) = rows[k][static_cast<std::size_t>(i)];
    for (Index i = 0; i < p; ++i)
      y(static_cast<Index>(k), i) = rows[k][static_cast<std::size_t>(m + i)];
  }
  return Trajectory(std::move(u), std::move(y), dt);
}

void write_trajectory_meta(const fs::path& path, const TrajectoryMeta& meta) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot open " + path.string() + " for writing");
  out << "m=" << meta.input_dim << '\n';
  out << "p=" << meta.output_dim << '\n';
  out << "dt=" << format_double(meta.dt) << '\n';
  out << "seed=" << meta.seed << '\n';
  out << "x0=";
  for (Index i = 0; i < meta.initial_state.size(); ++i) {
    if (i) out << ',';
    out << format_double(meta.initial_state(i));
  }
  out << '\n';
  for (const auto& [k, v] : meta.extra) out << k << '=' << v << '\n';
  if (!out) throw Error(ErrorKind::kIo, "write failed for " + path.string());
}

TrajectoryMeta read_trajectory_meta(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  TrajectoryMeta meta;
  std::string line;
  bool have_m = false;
  bool have_p = false;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::kFormat, path.string() + ": expected key=value, got '" + line + "'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key == "m") {
      meta.input_dim = static_cast<Index>(std::stoll(val));
      have_m = true;
    } else if (key == "p") {
      meta.output_dim = static_cast<Index>(std::stoll(val));
      have_p = true;
    } else if (key == "dt") {
      meta.dt = parse_double(val, path.string());
    } else if (key == "seed") {
      meta.seed = std::stoull(val);
    } else if (key == "x0") {
      const auto cells = val.empty() ? std::vector<std::string>{} : split(val, ',');
      meta.initial_state.resize(static_cast<Index>(cells.size()));
      for (std::size_t i = 0; i < cells.size(); ++i)
        meta.initial_state(static_cast<Index>(i)) = parse_double(trim(cells[i]), path.string());
    } else {
      meta.extra[key] = val;
    }
  }
  if (!have_m || !have_p) {
    throw Error(ErrorKind::kFormat, path.string() + ": metadata must define m and p");
  }
  return meta;
}

std::vector<ArchivedTrajectory> load_trajectory_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorKind::kIo, dir.string() + " is not a directory");
  std::vector<fs::path> csvs;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv") csvs.push_back(entry.path());
  }
  std::sort(csvs.begin(), csvs.end());
  std::vector<ArchivedTrajectory> out;
  out.reserve(csvs.size());
  for (const auto& csv : csvs) {
    auto meta_path = csv;
    meta_path.replace_extension(".meta");
    TrajectoryMeta meta = read_trajectory_meta(meta_path);
    Trajectory traj = read_trajectory_csv(csv, meta.dt);
    if (traj.input_dim() != meta.input_dim || traj.output_dim() != meta.output_dim) {
      throw Error(ErrorKind::kDimensionMismatch,
                  csv.string() + ": columns disagree with m/p in " + meta_path.string());
    }
    out.push_back({std::move(traj), std::move(meta)});
  }
  if (out.empty()) throw Error(ErrorKind::kIo, "no trajectory CSV files in " + dir.string());
  return out;
}

}  // namespace deepsel
