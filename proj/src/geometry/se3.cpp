#include "contactdyn/geometry/se3.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <numbers>

#include "contactdyn/error.hpp"

namespace contactdyn::geom {

Mat3 hat(const Vec3& w) {
  Mat3 m;
  m << 0.0, -w.z(), w.y(),  //
      w.z(), 0.0, -w.x(),   //
      -w.y(), w.x(), 0.0;
  return m;
}

Vec3 vee(const Mat3& m) { return Vec3(m(2, 1), m(0, 2), m(1, 0)); }

bool is_rotation(const Mat3& R, double tol) {
  if (!R.allFinite()) return false;
  const double ortho = (R.transpose() * R - Mat3::Identity()).cwiseAbs().maxCoeff();
  return ortho <= tol && std::abs(R.determinant() - 1.0) <= tol;
}

void validate_pose(const Pose& pose) {
  if (!pose.p.allFinite()) fail(ErrorCode::kNonFinite, "pose translation is not finite");
  if (!is_rotation(pose.R)) fail(ErrorCode::kInvalidArgument, "pose rotation is not orthonormal with det +1");
}

Mat3 exp_map(const Vec3& w) {
  if (!w.allFinite()) fail(ErrorCode::kNonFinite, "exp_map: non-finite axis-angle");
  const double theta = w.norm();
  const Mat3 K = hat(w);
  if (theta < 1e-8) return Mat3::Identity() + K + 0.5 * K * K;
  return Mat3::Identity() + (std::sin(theta) / theta) * K + ((1.0 - std::cos(theta)) / (theta * theta)) * K * K;
}

Vec3 log_map(const Mat3& R) {
  if (!is_rotation(R)) fail(ErrorCode::kInvalidArgument, "log_map: input is not a rotation matrix");
  const Vec3 v = 0.5 * vee(R - R.transpose());  // sin(theta) * axis
  const double s = v.norm();
  const double c = 0.5 * (R.trace() - 1.0);
  const double theta = std::atan2(s, c);
  if (theta < 1e-8) return v * (1.0 + theta * theta / 6.0);
  if (std::numbers::pi - theta > 1e-2) return (theta / s) * v;
  // near pi: symmetric part is (1 - cos) a a^T
  const Mat3 S = 0.5 * (R + R.transpose()) - c * Mat3::Identity();
  Eigen::Index i = 0;
  S.diagonal().maxCoeff(&i);
  Vec3 axis = S.col(i) / std::sqrt(std::max(S(i, i), 0.0) * (1.0 - c));
  axis.normalize();
  if (axis.dot(v) < 0.0) axis = -axis;
  return theta * axis;
}

std::vector<PoseIncrement> encode_increments(std::span<const Pose> poses) {
  std::vector<PoseIncrement> out;
  if (poses.empty()) return out;
  for (const Pose& p : poses) validate_pose(p);
  out.reserve(poses.size() - 1);
  for (std::size_t k = 1; k < poses.size(); ++k) {
    out.push_back({poses[k].p - poses[k - 1].p, log_map(poses[k].R * poses[k - 1].R.transpose())});
  }
  return out;
}

std::vector<Pose> apply_increments(const Pose& anchor, std::span<const PoseIncrement> increments) {
  validate_pose(anchor);
  std::vector<Pose> out;
  out.reserve(increments.size());
  Pose cur = anchor;
  for (const PoseIncrement& inc : increments) {
    if (!inc.dp.allFinite() || !inc.w.allFinite()) fail(ErrorCode::kNonFinite, "apply_increments: non-finite increment");
    cur.p = cur.p + inc.dp;
    cur.R = exp_map(inc.w) * cur.R;
    out.push_back(cur);
  }
  return out;
}

PointCloud transform_cloud(const PointCloud& cloud, const Pose& pose) {
  validate_pose(pose);
  PointCloud out;
  out.reserve(cloud.size());
  for (const Vec3& q : cloud) out.push_back(pose.R * q + pose.p);
  return out;
}

Pose planar_pose(double x, double y, double theta) {
  Pose pose;
  pose.p = Vec3(x, y, 0.0);
  const double c = std::cos(theta), s = std::sin(theta);
  pose.R << c, -s, 0.0,  //
      s, c, 0.0,         //
      0.0, 0.0, 1.0;
  return pose;
}

double planar_angle(const Pose& pose) { return std::atan2(pose.R(1, 0), pose.R(0, 0)); }

}  // namespace contactdyn::geom
