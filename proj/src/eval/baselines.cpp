#include "contactdyn/eval/baselines.hpp"

#include <algorithm>
#include <chrono>

#include "contactdyn/error.hpp"
#include "contactdyn/rng.hpp"

namespace contactdyn::eval {

std::string to_string(Regime r) {
  switch (r) {
    case Regime::kSimOnly: return "sim-only";
    case Regime::kRealOnly: return "real-only";
    case Regime::kRealFinetune: return "real-finetune";
  }
  return "?";
}

Regime regime_from_string(const std::string& s) {
  for (Regime r : kAllRegimes) {
    if (s == to_string(r)) return r;
  }
  fail(ErrorCode::kConfig, "unknown regime '" + s + "'");
}

void SuiteConfig::validate() const {
  model.validate();
  pretrain.validate();
  finetune.validate();
  if (finetune.learning_rate >= pretrain.learning_rate) {
    fail(ErrorCode::kConfig, "finetune learning rate must be below the pretrain learning rate");
  }
  rollout.validate(model.H);
  metrics.validate();
  if (eval_stride < 1) fail(ErrorCode::kConfig, "eval stride must be >= 1");
  if (seeds.empty()) fail(ErrorCode::kConfig, "at least one seed required");
}

namespace {

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

std::optional<CellSummary> BaselineTable::median(model::ModelKind kind, Regime regime, bool open_loop) const {
  std::vector<double> mse, auc, succ;
  for (const auto& c : cells) {
    if (c.kind != kind || c.regime != regime || !c.ok) continue;
    const auto& r = open_loop ? c.open_loop : c.rollout;
    mse.push_back(r.mse);
    auc.push_back(r.auc);
    succ.push_back(r.success);
  }
  if (mse.empty()) return std::nullopt;
  return CellSummary{median_of(mse), median_of(auc), median_of(succ), mse.size()};
}

BaselineTable baseline_suite(const std::vector<sim::Trajectory>& sim_train, const std::vector<sim::Trajectory>& real_train,
                             const std::vector<sim::Trajectory>& real_test, const std::vector<model::ModelKind>& kinds,
                             const SuiteConfig& cfg, const SuiteLog& log) {
  cfg.validate();
  if (sim_train.empty() || real_train.empty() || real_test.empty()) {
    fail(ErrorCode::kInvalidArgument, "baseline suite needs sim, real-twin train and real-twin test data");
  }
  BaselineTable table;
  table.kinds = kinds;
  auto say = [&](const std::string& s) {
    if (log) log(s);
  };
  using clock = std::chrono::steady_clock;

  for (model::ModelKind kind : kinds) {
    model::ModelConfig mc = cfg.model;
    mc.kind = kind;
    for (std::uint64_t seed : cfg.seeds) {
      auto evaluate = [&](CellResult& cell, const model::DynamicsModel& m) {
        RolloutConfig rc = cfg.rollout;
        rc.seed = derive_seed(seed, "rollout");
        cell.rollout = evaluate_rollouts(m, real_test, rc, cfg.metrics);
        cell.open_loop = evaluate_open_loop(m, real_test, cfg.eval_stride, derive_seed(seed, "open-loop"), cfg.metrics);
        cell.ok = true;
      };
      auto run = [&](Regime regime, const std::function<void(CellResult&)>& body) {
        CellResult cell;
        cell.kind = kind;
        cell.regime = regime;
        cell.seed = seed;
        const auto t0 = clock::now();
        try {
          body(cell);
        } catch (const std::exception& e) {
          cell.ok = false;
          cell.diagnostic = e.what();
        }
        cell.seconds = std::chrono::duration<double>(clock::now() - t0).count();
        say(model::to_string(kind) + " " + to_string(regime) + " seed " + std::to_string(seed) + ": " +
            (cell.ok ? format_cell(cell.rollout.mse, cell.rollout.auc) : "failed: " + cell.diagnostic));
        table.cells.push_back(std::move(cell));
      };

      std::optional<model::DynamicsModel> sim_model;
      run(Regime::kSimOnly, [&](CellResult& cell) {
        model::DynamicsModel m(mc, derive_seed(seed, "init"));
        training::TrainConfig tc = cfg.pretrain;
        tc.seed = derive_seed(seed, "pretrain");
        training::train_phase(m, sim_train, tc);
        evaluate(cell, m);
        sim_model.emplace(std::move(m));
      });
      run(Regime::kRealOnly, [&](CellResult& cell) {
        model::DynamicsModel m(mc, derive_seed(seed, "init"));
        training::TrainConfig tc = cfg.pretrain;
        tc.epochs = cfg.real_only_epochs >= 0 ? cfg.real_only_epochs : cfg.finetune.epochs;
        tc.seed = derive_seed(seed, "real-only");
        training::train_phase(m, real_train, tc);
        evaluate(cell, m);
      });
      run(Regime::kRealFinetune, [&](CellResult& cell) {
        if (!sim_model) fail(ErrorCode::kGeneric, "sim-pretrained parent failed");
        model::DynamicsModel m = *sim_model;
        training::TrainConfig tc = cfg.finetune;
        tc.phase = training::Phase::kFinetune;
        tc.fit_normalization = false;
        tc.seed = derive_seed(seed, "finetune");
        training::train_phase(m, real_train, tc);
        evaluate(cell, m);
      });
    }
  }
  return table;
}

}  // namespace contactdyn::eval
