#include "ousb/io.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <sstream>

namespace ousb {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

double parse_cell(const std::string& cell, size_t row, size_t col) {
  try {
    size_t pos = 0;
    const double v = std::stod(cell, &pos);
    while (pos < cell.size() && std::isspace(static_cast<unsigned char>(cell[pos]))) ++pos;
    if (pos != cell.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw DataError("csv: non-numeric cell at row " + std::to_string(row) + ", column " +
                    std::to_string(col));
  }
}

}  // namespace

std::vector<Snapshot> read_snapshots_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("csv: cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError("csv: empty file " + path.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_line(line);
  if (header.empty() || header[0] != "t")
    throw DataError("csv: missing column 't' in " + path.string());
  const int d = static_cast<int>(header.size()) - 1;
  if (d < 1) throw DataError("csv: missing columns x1..xd in " + path.string());
  for (int k = 0; k < d; ++k) {
    const std::string expected = "x" + std::to_string(k + 1);
    if (header[k + 1] != expected)
      throw DataError("csv: missing column '" + expected + "' in " + path.string());
  }

  std::vector<double> times;
  std::vector<std::vector<double>> rows;
  size_t row_idx = 1;
  while (std::getline(in, line)) {
    ++row_idx;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_line(line);
    if (static_cast<int>(cells.size()) != d + 1)
      throw DataError("csv: ragged row " + std::to_string(row_idx) + " (expected " +
                      std::to_string(d + 1) + " cells, got " + std::to_string(cells.size()) + ")");
    std::vector<double> row(d + 1);
    for (size_t c = 0; c < cells.size(); ++c) row[c] = parse_cell(cells[c], row_idx, c + 1);
    times.push_back(row[0]);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError("csv: no data rows in " + path.string());

  // Group rows by time, ascending; rows keep file order within a snapshot.
  std::map<double, std::vector<const std::vector<double>*>> groups;
  for (const auto& row : rows) groups[row[0]].push_back(&row);
  std::vector<Snapshot> snapshots;
  for (const auto& [t, group] : groups) {
    Snapshot snap;
    snap.time = t;
    snap.samples.resize(static_cast<Eigen::Index>(group.size()), d);
    for (size_t i = 0; i < group.size(); ++i)
      for (int k = 0; k < d; ++k) snap.samples(static_cast<Eigen::Index>(i), k) = (*group[i])[k + 1];
    snapshots.push_back(std::move(snap));
  }
  return snapshots;
}

void write_snapshots_csv(const fs::path& path, const std::vector<Snapshot>& snapshots) {
  if (snapshots.empty()) throw std::invalid_argument("write_snapshots_csv: no snapshots");
  const int d = static_cast<int>(snapshots[0].samples.cols());
  std::ostringstream out;
  out << "t";
  for (int k = 1; k <= d; ++k) out << ",x" << k;
  out << "\n";
  for (const auto& snap : snapshots) {
    for (Eigen::Index i = 0; i < snap.samples.rows(); ++i) {
      out << format_double(snap.time);
      for (int k = 0; k < d; ++k) out << "," << format_double(snap.samples(i, k));
      out << "\n";
    }
  }
  atomic_write(path, out.str());
}

void write_trajectories_csv(const fs::path& path, const std::vector<Trajectory>& trajectories) {
  if (trajectories.empty()) throw std::invalid_argument("write_trajectories_csv: no trajectories");
  const int d = static_cast<int>(trajectories[0].states.cols());
  std::ostringstream out;
  out << "traj,t";
  for (int k = 1; k <= d; ++k) out << ",x" << k;
  out << "\n";
  for (size_t idx = 0; idx < trajectories.size(); ++idx) {
    const auto& traj = trajectories[idx];
    for (size_t s = 0; s < traj.times.size(); ++s) {
      out << idx << "," << format_double(traj.times[s]);
      for (int k = 0; k < d; ++k)
        out << "," << format_double(traj.states(static_cast<Eigen::Index>(s), k));
      out << "\n";
    }
  }
  atomic_write(path, out.str());
}

void atomic_write(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out << content;
  }
  fs::rename(tmp, path);
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw DataError("json: parse error in " + path.string() + ": " + e.what());
  }
  return j;
}

void write_json_file(const fs::path& path, const json& j) { atomic_write(path, j.dump(2) + "\n"); }

void require_known_keys(const json& j, const std::set<std::string>& allowed,
                        const std::string& context) {
  if (!j.is_object()) throw ConfigError("config: " + context + " must be an object");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (!allowed.count(key))
      throw ConfigError("config: unknown key '" + key + "' in " + context);
  }
}

std::string config_hash(const json& config) {
  const std::string canonical = config.dump();
  uint64_t hash = 1469598103934665603ULL;
  for (unsigned char c : canonical) {
    hash ^= c;
    hash *= 1099511628211ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, hash);
  return buf;
}

void write_manifest(const fs::path& out_dir, const Manifest& manifest) {
  json j{{"config_hash", manifest.config_hash},
         {"seed", manifest.seed},
         {"versions", {{"ousb", kVersion}}},
         {"wall_time_s", manifest.wall_time_s},
         {"artifacts", manifest.artifacts}};
  write_json_file(out_dir / "manifest.json", j);
}

}  // namespace ousb
