#pragma once

#include <filesystem>
#include <nlohmann/json_fwd.hpp>
#include <set>
#include <string>
#include <vector>

#include "ousb/fm.hpp"
#include "ousb/sim.hpp"

namespace ousb {

// All floating-point output uses 17 significant digits so files round-trip
// exactly.
std::string format_double(double value);

// Snapshot CSV schema: header "t,x1,...,xd", one row per sample; snapshots
// are distinguished by distinct t values. Malformed cells and ragged rows
// raise DataError with the row/column; missing columns are named.
std::vector<Snapshot> read_snapshots_csv(const std::filesystem::path& path);
void write_snapshots_csv(const std::filesystem::path& path, const std::vector<Snapshot>& snapshots);

// Trajectory CSV schema: header "traj,t,x1,...,xd".
void write_trajectories_csv(const std::filesystem::path& path,
                            const std::vector<Trajectory>& trajectories);

// Atomic write: temp file in the target directory, then rename.
void atomic_write(const std::filesystem::path& path, const std::string& content);

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);

// Rejects keys outside `allowed`; context names the config section in errors.
void require_known_keys(const nlohmann::json& j, const std::set<std::string>& allowed,
                        const std::string& context);

// FNV-1a over the canonical serialisation; used for the manifest config hash.
std::string config_hash(const nlohmann::json& config);

struct Manifest {
  std::string config_hash;
  uint64_t seed = 0;
  double wall_time_s = 0.0;
  std::vector<std::string> artifacts;
};

void write_manifest(const std::filesystem::path& out_dir, const Manifest& manifest);

inline constexpr const char* kVersion = "0.1.0";

}  // namespace ousb
