#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "contactdyn/eval/metrics.hpp"
#include "contactdyn/eval/rollout.hpp"
#include "contactdyn/model/model.hpp"
#include "contactdyn/training/training.hpp"

namespace contactdyn::eval {

enum class Regime { kSimOnly, kRealOnly, kRealFinetune };

std::string to_string(Regime r);
Regime regime_from_string(const std::string& s);
inline constexpr Regime kAllRegimes[] = {Regime::kSimOnly, Regime::kRealOnly, Regime::kRealFinetune};

struct SuiteConfig {
  model::ModelConfig model = model::ModelConfig::desk();  //!< kind is set per row
  training::TrainConfig pretrain = training::TrainConfig::pretrain();
  training::TrainConfig finetune = training::TrainConfig::finetune();
  int real_only_epochs = -1;  //!< -1: same as finetune.epochs
  RolloutConfig rollout = RolloutConfig::defaults(8);
  MetricsConfig metrics;
  int eval_stride = 4;
  std::vector<std::uint64_t> seeds{0, 1, 2};

  void validate() const;
};

struct CellResult {
  model::ModelKind kind = model::ModelKind::kDiffusionContact;
  Regime regime = Regime::kSimOnly;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string diagnostic;
  MetricsReport open_loop;  //!< H-step chunks
  MetricsReport rollout;    //!< receding horizon
  double seconds = 0.0;
};

struct CellSummary {
  double mse = 0.0;
  double auc = 0.0;
  double success = 0.0;
  std::size_t seeds = 0;  //!< successful seeds entering the median
};

struct BaselineTable {
  std::vector<model::ModelKind> kinds;
  std::vector<CellResult> cells;

  //! Median over seeds of the receding-horizon metrics (open-loop if `open_loop`).
  std::optional<CellSummary> median(model::ModelKind kind, Regime regime, bool open_loop = false) const;
};

using SuiteLog = std::function<void(const std::string&)>;

//! Trains every kind under sim-only, real-only and sim-pretrain + real-finetune
//! with identical budgets and evaluates on the real-twin test split. A failed
//! cell keeps its diagnostic instead of metrics.
BaselineTable baseline_suite(const std::vector<sim::Trajectory>& sim_train, const std::vector<sim::Trajectory>& real_train,
                             const std::vector<sim::Trajectory>& real_test, const std::vector<model::ModelKind>& kinds,
                             const SuiteConfig& cfg, const SuiteLog& log = {});

}  // namespace contactdyn::eval
