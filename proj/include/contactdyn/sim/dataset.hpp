#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <memory>
#include <vector>

#include "contactdyn/geometry/se3.hpp"
#include "contactdyn/sim/env.hpp"

namespace contactdyn::sim {

//! One recorded episode; every per-step array has length T + 1 (t = 0..T).
struct Trajectory {
  Domain domain = Domain::kSim;
  std::uint64_t seed = 0;
  std::shared_ptr<const geom::PointCloud> cloud;
  std::vector<geom::Pose> poses;
  std::vector<Eigen::VectorXd> joints;
  std::vector<Eigen::VectorXd> actions;
  std::vector<int> contacts;
  std::vector<std::vector<tactile::FingerForce>> forces;

  std::size_t steps() const { return poses.size(); }
  //! Throws if the per-step arrays disagree in length or contain non-finite values.
  void validate() const;
  bool operator==(const Trajectory& other) const;
};

//! Reach-push-release script: fingers start behind the object, drive along
//! `direction` at `speed` from `start_step`, and retract after `release_step`.
struct PolicyParams {
  double direction = 0.0;          //!< radians, world frame
  double approach_distance = 0.08; //!< start distance behind the object center, meters
  double lateral_offset = 0.0;     //!< perpendicular offset of the finger pair, meters
  double finger_spacing = 0.03;    //!< meters between adjacent fingers
  double speed = 0.2;              //!< m/s
  int start_step = 0;
  int release_step = 40;
  double retract_speed = 0.1;      //!< m/s
};

struct PolicyConfig {
  double approach_min = 0.075, approach_max = 0.10;
  double lateral_max = 0.06;
  double speed_min = 0.1, speed_max = 0.3;
  int start_max = 5;
  int release_min = 30, release_max = 50;
  double object_offset = 0.05;     //!< initial object position drawn from [-offset, offset]^2
};

PolicyParams sample_policy(const PolicyConfig& cfg, Rng& rng);
Eigen::VectorXd initial_fingers(const PolicyParams& params, const geom::Pose& object, int fingers);
Eigen::VectorXd policy_action(const PolicyParams& params, int t, int fingers);

//! Surface samples of a box with the given half extents, object frame.
geom::PointCloud sample_box_cloud(double hx, double hy, double hz, int n, Rng& rng);

//! Runs one episode of length T + 1. Real-twin episodes calibrate the tactile
//! offset over a stationary pre-roll, record calibrated forces and noisy poses.
Trajectory generate_trajectory(const EnvConfig& cfg, int T, const PolicyConfig& policy, std::uint64_t seed);
//! Same, with the script parameters and initial object pose given.
Trajectory generate_trajectory(const EnvConfig& cfg, int T, const PolicyParams& params, const geom::Pose& object,
                               std::uint64_t seed);

//! Trajectory i uses seed + i.
std::vector<Trajectory> generate_dataset(const EnvConfig& cfg, int n_traj, int T, const PolicyConfig& policy,
                                         std::uint64_t seed, int K = 9, int H = 8);

//! Model input bundle at anchor step t plus its H-step targets.
struct HistoryWindow {
  std::size_t trajectory = 0;
  std::size_t t = 0;
  std::vector<geom::Pose> poses;            //!< s_{t-K..t}
  std::vector<Eigen::VectorXd> joints;      //!< q_{t-K..t}
  std::vector<Eigen::VectorXd> actions;     //!< a_{t-K..t}
  std::vector<int> contacts;                //!< c_{t-K..t}
  std::shared_ptr<const geom::PointCloud> cloud;
  std::vector<int> target_contacts;                 //!< c_{t+1..t+H}
  std::vector<geom::PoseIncrement> target_increments;  //!< x0
  std::vector<geom::Pose> target_poses;             //!< s_{t+1..t+H}

  std::size_t history() const { return poses.size(); }
  std::size_t horizon() const { return target_increments.size(); }
  const geom::Pose& anchor() const { return poses.back(); }
};

HistoryWindow window_at(const Trajectory& traj, std::size_t t, int K, int H, std::size_t traj_index = 0);

//! Windows at t = K, K + stride, ...; floor((T - K - H) / stride) + 1 of them.
std::vector<HistoryWindow> build_history_windows(const Trajectory& traj, int K, int H, int stride,
                                                 std::size_t traj_index = 0);
std::vector<HistoryWindow> build_history_windows(const std::vector<Trajectory>& trajs, int K, int H, int stride);

double contact_fraction(const std::vector<Trajectory>& trajs);

struct LabelAgreement {
  double agree = 0.0;            //!< fraction of all steps with equal labels
  double disagree = 0.0;         //!< 1 - agree
  double disagree_adjacent = 0.0;  //!< disagreement among steps within one step of any contact
  std::size_t steps = 0;
};

//! Step-by-step comparison of paired datasets (same seeds, different domains).
LabelAgreement label_agreement(const std::vector<Trajectory>& a, const std::vector<Trajectory>& b);

}  // namespace contactdyn::sim
