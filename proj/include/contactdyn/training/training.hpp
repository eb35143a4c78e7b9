#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "contactdyn/model/model.hpp"
#include "contactdyn/rng.hpp"
#include "contactdyn/sim/dataset.hpp"

namespace contactdyn::training {

enum class Phase { kPretrain, kFinetune };

std::string to_string(Phase p);
Phase phase_from_string(const std::string& s);

struct TrainConfig {
  Phase phase = Phase::kPretrain;
  double learning_rate = 1e-3;
  //! Cosine decay from learning_rate to learning_rate * lr_final_fraction over
  //! the whole phase. 1 keeps the rate constant.
  double lr_final_fraction = 1.0;
  double lambda = 1.0;
  int batch_size = 32;
  int epochs = 20;
  std::uint64_t seed = 0;
  double val_fraction = 0.1;  //!< split by trajectory
  int stride = 4;             //!< window anchor spacing
  //! Fit input/target normalization on the training windows before the first
  //! step. Finetuning keeps the statistics of its parent.
  bool fit_normalization = true;

  void validate() const;
  static TrainConfig pretrain();
  static TrainConfig finetune();
};

struct LossValues {
  double total = 0.0;
  double contact = 0.0;
  double diffusion = 0.0;
};

struct EpochReport {
  int epoch = 0;
  LossValues train;
  bool has_validation = false;
  LossValues validation;
  std::size_t steps = 0;  //!< optimizer steps so far
};

struct LossReport {
  std::vector<EpochReport> epochs;
};

//! Loss nodes recorded on a graph. Models without a contact head have
//! contact == constant 0; direct regressors use the squared x0 error as
//! the second term.
struct JointLoss {
  num::Var total;
  num::Var contact;
  num::Var diffusion;
};

//! Records L = L_cnt + lambda * L_diff for a batch. Draws one t per sample
//! from `t_rng` and the noise from `eps_rng`.
JointLoss record_joint_loss(num::Graph& g, const model::DynamicsModel& m,
                            std::span<const sim::HistoryWindow* const> batch, double lambda, Rng& t_rng,
                            Rng& eps_rng);

//! Evaluates the joint loss and, if `with_gradients`, overwrites the
//! gradient buffers of m.params() with dL/dparams.
LossValues joint_loss(model::DynamicsModel& m, std::span<const sim::HistoryWindow* const> batch, double lambda,
                      std::uint64_t seed, bool with_gradients = true);

//! Deterministic validation split: returns (train, validation) trajectory indices.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_trajectories(std::size_t n, double val_fraction,
                                                                                 std::uint64_t seed);

using EpochCallback = std::function<void(const EpochReport&, const model::DynamicsModel&)>;

//! Trains `m` in place on windows of `data`. Aborts with kNonFinite on a
//! diverging loss. Zero epochs leaves the parameters untouched.
LossReport train_phase(model::DynamicsModel& m, const std::vector<sim::Trajectory>& data, const TrainConfig& cfg,
                       const EpochCallback& on_epoch = {});

}  // namespace contactdyn::training
