#include "contactdyn/geometry/add_s.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "contactdyn/error.hpp"

namespace contactdyn::geom {

NearestNeighbor::NearestNeighbor(const PointCloud& points) : points_(points) {
  if (points_.empty()) fail(ErrorCode::kInvalidArgument, "nearest neighbour index over an empty cloud");
  std::vector<int> idx(points_.size());
  std::iota(idx.begin(), idx.end(), 0);
  nodes_.reserve(points_.size());
  root_ = build(idx, 0, static_cast<int>(idx.size()), 0);
}

int NearestNeighbor::build(std::vector<int>& idx, int lo, int hi, int depth) {
  if (lo >= hi) return -1;
  const int axis = depth % 3;
  const int mid = lo + (hi - lo) / 2;
  std::nth_element(idx.begin() + lo, idx.begin() + mid, idx.begin() + hi,
                   [&](int a, int b) { return points_[a][axis] < points_[b][axis]; });
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back({idx[mid], axis, -1, -1});
  const int left = build(idx, lo, mid, depth + 1);
  const int right = build(idx, mid + 1, hi, depth + 1);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

void NearestNeighbor::search(int node, const Vec3& q, double& best) const {
  if (node < 0) return;
  const Node& n = nodes_[node];
  const Vec3& p = points_[n.point];
  best = std::min(best, (p - q).squaredNorm());
  const double diff = q[n.axis] - p[n.axis];
  const int near = diff < 0.0 ? n.left : n.right;
  const int far = diff < 0.0 ? n.right : n.left;
  search(near, q, best);
  if (diff * diff < best) search(far, q, best);
}

double NearestNeighbor::nearest_squared(const Vec3& q) const {
  double best = std::numeric_limits<double>::infinity();
  search(root_, q, best);
  return best;
}

double add_s(const Pose& pred, const Pose& gt, const PointCloud& cloud, const NearestNeighbor& index) {
  // Express ground-truth-posed points in the predicted object frame, then
  // search the object-frame cloud.
  const Mat3 Rt = pred.R.transpose();
  double total = 0.0;
  for (const Vec3& q : cloud) {
    const Vec3 local = Rt * (gt.R * q + gt.p - pred.p);
    total += std::sqrt(index.nearest_squared(local));
  }
  return total / static_cast<double>(cloud.size());
}

double auc_from_distances(std::span<const double> distances, double d_max) {
  if (distances.empty()) fail(ErrorCode::kInvalidArgument, "ADD-S AUC over an empty sequence");
  if (!(d_max > 0.0)) fail(ErrorCode::kInvalidArgument, "ADD-S AUC requires d_max > 0");
  std::size_t below = 0;
  for (int i = 1; i <= kAddSThresholdCount; ++i) {
    const double tau = d_max * i / kAddSThresholdCount;
    below += static_cast<std::size_t>(std::count_if(distances.begin(), distances.end(), [tau](double d) { return d < tau; }));
  }
  return 100.0 * static_cast<double>(below) / static_cast<double>(kAddSThresholdCount * distances.size());
}

AddSResult add_s_auc(std::span<const Pose> pred, std::span<const Pose> gt, const PointCloud& cloud, double d_max) {
  if (pred.empty() || gt.empty()) fail(ErrorCode::kInvalidArgument, "ADD-S over empty sequences");
  if (pred.size() != gt.size()) fail(ErrorCode::kInvalidArgument, "ADD-S: sequence lengths differ");
  if (!(d_max > 0.0)) fail(ErrorCode::kInvalidArgument, "ADD-S AUC requires d_max > 0");
  const NearestNeighbor index(cloud);
  AddSResult r;
  r.per_frame.reserve(pred.size());
  for (std::size_t f = 0; f < pred.size(); ++f) r.per_frame.push_back(add_s(pred[f], gt[f], cloud, index));
  r.auc = auc_from_distances(r.per_frame, d_max);
  return r;
}

}  // namespace contactdyn::geom
