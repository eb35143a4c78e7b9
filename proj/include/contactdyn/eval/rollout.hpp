#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "contactdyn/eval/metrics.hpp"
#include "contactdyn/model/model.hpp"
#include "contactdyn/sim/dataset.hpp"

namespace contactdyn::eval {

enum class ContactFeedback { kSelfPredicted, kOracle };

std::string to_string(ContactFeedback f);
ContactFeedback feedback_from_string(const std::string& s);

struct RolloutConfig {
  int total_horizon = 40;  //!< T_roll
  int h_apply = 4;         //!< committed steps per chunk
  ContactFeedback feedback = ContactFeedback::kSelfPredicted;
  std::uint64_t seed = 0;

  void validate(int H) const;
  //! T_roll = 5H, h_apply = H / 2.
  static RolloutConfig defaults(int H);
};

struct RolloutResult {
  std::size_t start = 0;              //!< anchor index t0 = K
  std::vector<geom::Pose> poses;      //!< predicted s_{t0+1..t0+T_roll}
  std::vector<int> contacts;          //!< contact labels fed back for the same steps
  std::vector<double> probabilities;  //!< predicted c-hat for the same steps (empty without Stage I)
};

//! Receding-horizon rollout from t0 = K over a batch of trajectories,
//! advanced in lock step. Actions and joints come from the logs; committed
//! poses replace the history. Without Stage I, self-predicted mode falls
//! back to logged labels.
std::vector<RolloutResult> rollout_long_horizon(const model::DynamicsModel& m,
                                                std::span<const sim::Trajectory* const> trajs,
                                                const RolloutConfig& cfg);
RolloutResult rollout_long_horizon(const model::DynamicsModel& m, const sim::Trajectory& traj,
                                   const RolloutConfig& cfg);

//! Rollout metrics against the logged poses s_{t0+1..t0+T_roll}.
MetricsReport evaluate_rollouts(const model::DynamicsModel& m, const std::vector<sim::Trajectory>& test,
                                const RolloutConfig& rcfg, const MetricsConfig& mcfg);

//! H-step open-loop chunk predictions over all windows of the test set.
MetricsReport evaluate_open_loop(const model::DynamicsModel& m, const std::vector<sim::Trajectory>& test, int stride,
                                 std::uint64_t seed, const MetricsConfig& mcfg, std::size_t batch = 64);

}  // namespace contactdyn::eval
