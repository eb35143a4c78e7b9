#include "contactdyn/tactile/tactile.hpp"

#include <cmath>

#include "contactdyn/error.hpp"

namespace contactdyn::tactile {

void TactileConfig::validate() const {
  if (!(window_s > 0.0)) fail(ErrorCode::kConfig, "tactile.window_s must be positive");
  if (!(threshold > 0.0)) fail(ErrorCode::kConfig, "tactile.threshold must be positive");
  if (!(noise_sigma >= 0.0) || !(bias_sigma >= 0.0)) fail(ErrorCode::kConfig, "tactile noise scales must be >= 0");
}

std::size_t window_samples(const TactileConfig& cfg, double dt) {
  if (!(dt > 0.0)) fail(ErrorCode::kInvalidArgument, "tactile: dt must be positive");
  return static_cast<std::size_t>(std::ceil(cfg.window_s / dt - 1e-9));
}

CalibrationOffset calibrate_offset(std::span<const std::vector<FingerForce>> readings, double dt,
                                   const TactileConfig& cfg) {
  cfg.validate();
  const std::size_t n = window_samples(cfg, dt);
  if (readings.size() < n) {
    fail(ErrorCode::kInvalidArgument, "calibration window too short: " + std::to_string(readings.size()) + " < " +
                                          std::to_string(n) + " samples");
  }
  const std::size_t fingers = readings[0].size();
  CalibrationOffset off;
  off.per_finger.assign(fingers, FingerForce::Zero());
  for (std::size_t t = 0; t < n; ++t) {
    if (readings[t].size() != fingers) fail(ErrorCode::kInvalidArgument, "calibration: finger count changes");
    for (std::size_t f = 0; f < fingers; ++f) off.per_finger[f] += readings[t][f];
  }
  for (auto& v : off.per_finger) v /= static_cast<double>(n);
  return off;
}

bool finger_in_contact(const FingerForce& calibrated, const TactileConfig& cfg) {
  switch (cfg.rule) {
    case ContactRule::kMagnitude:
      return calibrated.norm() > cfg.threshold;
    case ContactRule::kL1Sum:
    default:
      return calibrated.cwiseAbs().sum() > cfg.threshold;
  }
}

int detect_contact(std::span<const FingerForce> raw, const CalibrationOffset& offset, const TactileConfig& cfg) {
  if (raw.size() != offset.per_finger.size()) fail(ErrorCode::kInvalidArgument, "detect_contact: finger count mismatch");
  for (std::size_t f = 0; f < raw.size(); ++f) {
    if (finger_in_contact(raw[f] - offset.per_finger[f], cfg)) return 1;
  }
  return 0;
}

}  // namespace contactdyn::tactile
