#pragma once

#include <optional>
#include <string>
#include <vector>

#include "contactdyn/eval/baselines.hpp"
#include "contactdyn/io/config.hpp"
#include "contactdyn/model/model.hpp"
#include "contactdyn/sim/dataset.hpp"
#include "contactdyn/training/training.hpp"

namespace contactdyn::io {

inline constexpr int kDatasetVersion = 1;
inline constexpr int kCheckpointVersion = 1;

//! Writes to `path.tmp` then renames over `path`.
void write_file_atomic(const std::string& path, const std::string& bytes);
std::string read_file(const std::string& path);

struct DatasetFile {
  Json manifest;
  std::vector<sim::Trajectory> trajectories;

  sim::Domain domain() const;
};

//! Manifest fields: format, version, domain, count, K, H, T, seed,
//! env_config_hash, config (effective run configuration).
Json dataset_manifest(const RunConfig& cfg, sim::Domain domain, std::size_t count, std::uint64_t seed);
Json trajectory_to_json(const sim::Trajectory& t);
sim::Trajectory trajectory_from_json(const Json& j);
std::string dataset_to_string(const DatasetFile& d);
DatasetFile dataset_from_string(const std::string& text);
void write_dataset(const std::string& path, const DatasetFile& d);
DatasetFile read_dataset(const std::string& path);

//! First line: JSON manifest; then a little-endian float32 blob with every
//! tensor in manifest order. Parameters lose precision to 32-bit floats.
struct CheckpointFile {
  Json manifest;
  model::DynamicsModel model;
  std::string hash;  //!< SHA-256 of the whole file

  std::optional<std::string> parent_hash() const;
};

struct CheckpointInfo {
  training::Phase phase = training::Phase::kPretrain;
  int epoch = 0;
  std::uint64_t seed = 0;
  std::optional<std::string> parent_hash;
  Json config;  //!< effective run configuration
};

std::string checkpoint_to_string(const model::DynamicsModel& m, const CheckpointInfo& info);
CheckpointFile checkpoint_from_string(const std::string& bytes);
//! Returns the file hash.
std::string write_checkpoint(const std::string& path, const model::DynamicsModel& m, const CheckpointInfo& info);
CheckpointFile read_checkpoint(const std::string& path);

Json to_json(const training::EpochReport& e);
Json to_json(const eval::MetricsReport& r, bool per_sequence = true);
//! Table rows: kind; columns: regime x {mse, auc} medians, plus per-seed cells.
Json to_json(const eval::BaselineTable& t);
std::string metrics_csv(const eval::MetricsReport& r);
std::string baselines_csv(const eval::BaselineTable& t);

//! Predicted rollouts as JSON-lines, one object per trajectory.
std::string rollouts_to_string(const Json& header, const std::vector<sim::Trajectory>& trajs,
                               const std::vector<eval::RolloutResult>& results);

}  // namespace contactdyn::io
