#pragma once

#include <span>
#include <string>
#include <vector>

#include "contactdyn/geometry/se3.hpp"

namespace contactdyn::eval {

struct MetricsConfig {
  double d_max = 0.05;              //!< ADD-S AUC threshold sweep upper bound, meters
  double success_threshold = 0.025; //!< endpoint translation error for success, meters

  void validate() const;
  //! d_max = 10% and success threshold = 5% of the workspace extent.
  static MetricsConfig for_workspace(double extent);
};

//! Increment-space MSE: unweighted mean over all 6 channels (meters, radians).
inline constexpr const char* kMseConvention = "increment-space, unweighted mean of (dp [m], w [rad]) squared errors";

struct SequenceMetrics {
  double mse = 0.0;
  double auc = 0.0;
  double endpoint_error = 0.0;
  bool success = false;
};

struct MetricsReport {
  double mse = 0.0;      //!< mean over all predicted increments of all sequences
  double auc = 0.0;      //!< pooled over every frame of every sequence
  double success = 0.0;  //!< percentage of sequences
  std::size_t sequences = 0;
  std::size_t frames = 0;
  std::vector<SequenceMetrics> per_sequence;
  MetricsConfig config;
};

//! One predicted pose sequence s_{t+1..t+n} against ground truth, both
//! continuing from the shared anchor s_t.
struct SequencePair {
  geom::Pose anchor;
  std::vector<geom::Pose> pred;
  std::vector<geom::Pose> gt;
  const geom::PointCloud* cloud = nullptr;
};

SequenceMetrics sequence_metrics(const SequencePair& pair, const MetricsConfig& cfg);
MetricsReport compute_metrics(std::span<const SequencePair> pairs, const MetricsConfig& cfg);

//! "0.0082 MSE / 88.23 ADD-S"
std::string format_cell(double mse, double auc);

}  // namespace contactdyn::eval
