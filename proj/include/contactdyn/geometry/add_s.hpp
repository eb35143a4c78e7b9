#pragma once

#include <span>
#include <vector>

#include "contactdyn/geometry/se3.hpp"

namespace contactdyn::geom {

inline constexpr int kAddSThresholdCount = 100;

struct AddSResult {
  double auc = 0.0;                //!< percentage in [0, 100]
  std::vector<double> per_frame;   //!< ADD-S distance per frame, meters
};

//! Nearest-neighbour index over a fixed point set (3-d tree).
class NearestNeighbor {
 public:
  explicit NearestNeighbor(const PointCloud& points);
  //! Squared distance from q to the closest stored point.
  double nearest_squared(const Vec3& q) const;

 private:
  struct Node {
    int point = -1;
    int axis = 0;
    int left = -1;
    int right = -1;
  };
  int build(std::vector<int>& idx, int lo, int hi, int depth);
  void search(int node, const Vec3& q, double& best) const;

  PointCloud points_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

//! Per-frame ADD-S: mean over ground-truth-posed points of the distance to
//! the nearest prediction-posed point.
double add_s(const Pose& pred, const Pose& gt, const PointCloud& cloud, const NearestNeighbor& index);

//! Area under the fraction-of-frames-below-threshold curve for thresholds
//! d_max * i / 100, i = 1..100, as a percentage.
AddSResult add_s_auc(std::span<const Pose> pred, std::span<const Pose> gt, const PointCloud& cloud, double d_max);

//! Same sweep applied to precomputed per-frame distances.
double auc_from_distances(std::span<const double> distances, double d_max);

}  // namespace contactdyn::geom
