#pragma once

#include <cstdint>
#include <string>

#include "contactdyn/eval/metrics.hpp"
#include "contactdyn/eval/rollout.hpp"
#include "contactdyn/model/model.hpp"
#include "contactdyn/sim/dataset.hpp"
#include "contactdyn/sim/env.hpp"
#include "contactdyn/training/training.hpp"
#include "json.hpp"

namespace contactdyn::io {

using Json = nlohmann::json;

struct DataConfig {
  int T = 60;        //!< steps per trajectory (T + 1 samples)
  int stride = 4;    //!< window anchor spacing
  int n_sim = 2000;
  int n_real = 200;
  int n_test = 50;
};

//! Merged configuration tree; every field has a default.
struct RunConfig {
  std::uint64_t seed = 0;
  DataConfig data;
  sim::EnvConfig sim = sim::EnvConfig::sim();
  sim::EnvConfig real = sim::EnvConfig::real_twin();
  sim::PolicyConfig policy;
  model::ModelConfig model = model::ModelConfig::desk();
  training::TrainConfig pretrain = training::TrainConfig::pretrain();
  training::TrainConfig finetune = training::TrainConfig::finetune();
  eval::RolloutConfig rollout = eval::RolloutConfig::defaults(8);
  eval::MetricsConfig metrics;

  const sim::EnvConfig& env(sim::Domain d) const { return d == sim::Domain::kSim ? sim : real; }
  void validate() const;
};

Json to_json(const sim::EnvConfig& c);
Json to_json(const sim::PolicyConfig& c);
Json to_json(const model::ModelConfig& c);
Json to_json(const training::TrainConfig& c);
Json to_json(const eval::RolloutConfig& c);
Json to_json(const eval::MetricsConfig& c);
Json to_json(const RunConfig& c);

//! Overlays `j` onto `base`; unknown keys and wrong types raise kConfig.
void merge(sim::EnvConfig& base, const Json& j);
void merge(model::ModelConfig& base, const Json& j);
void merge(training::TrainConfig& base, const Json& j);
void merge(RunConfig& base, const Json& j);

model::ModelConfig model_config_from_json(const Json& j);

//! Defaults overlaid with the JSON file at `path` (empty path: defaults only).
RunConfig load_run_config(const std::string& path);

//! CONTACTDYN_SEED, when set, replaces the root seed. Returns true if applied.
bool apply_seed_override(RunConfig& c);

std::string sha256_hex(const void* data, std::size_t n);
std::string sha256_hex(const std::string& s);
//! Hash of the canonical (sorted-key) dump.
std::string config_hash(const Json& j);

}  // namespace contactdyn::io
