#pragma once

#include <Eigen/Core>
#include <span>
#include <vector>

namespace contactdyn::tactile {

//! Aggregated fingertip force (F_x, F_y, F_z), newtons.
using FingerForce = Eigen::Vector3d;

enum class ContactRule {
  kL1Sum,      //!< |F_x| + |F_y| + |F_z| > threshold
  kMagnitude,  //!< ||F||_2 > threshold (normal-force proxy; fingertip normals are not observed)
};

struct TactileConfig {
  double window_s = 3.0;       //!< stationary calibration window
  double threshold = 0.3;      //!< newtons
  double noise_sigma = 0.05;   //!< sensor noise, newtons
  double bias_sigma = 0.2;     //!< per-episode static offset scale, newtons
  ContactRule rule = ContactRule::kL1Sum;

  void validate() const;
};

struct CalibrationOffset {
  std::vector<FingerForce> per_finger;
};

//! Number of samples the calibration window spans at step `dt`.
std::size_t window_samples(const TactileConfig& cfg, double dt);

//! Componentwise mean of the first window_samples(cfg, dt) readings.
//! `readings[t][f]` is finger f at sample t.
CalibrationOffset calibrate_offset(std::span<const std::vector<FingerForce>> readings, double dt,
                                   const TactileConfig& cfg);

//! Per-finger rule applied to an already-calibrated force.
bool finger_in_contact(const FingerForce& calibrated, const TactileConfig& cfg);

//! Hand-level label: offset applied per finger, then OR over fingers.
int detect_contact(std::span<const FingerForce> raw, const CalibrationOffset& offset, const TactileConfig& cfg);

}  // namespace contactdyn::tactile
