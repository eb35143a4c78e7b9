#pragma once

#include <Eigen/Core>
#include <span>
#include <vector>

namespace contactdyn::geom {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

//! Object pose on SE(3): translation in meters and a rotation matrix.
struct Pose {
  Vec3 p = Vec3::Zero();
  Mat3 R = Mat3::Identity();

  static Pose identity() { return {}; }
  bool operator==(const Pose& o) const { return p == o.p && R == o.R; }
};

//! Consecutive-pose increment: translation delta and axis-angle rotation.
struct PoseIncrement {
  Vec3 dp = Vec3::Zero();
  Vec3 w = Vec3::Zero();
  bool operator==(const PoseIncrement& o) const { return dp == o.dp && w == o.w; }
};

using PointCloud = std::vector<Vec3>;

inline constexpr double kRotationTolerance = 1e-9;

Mat3 hat(const Vec3& w);
Vec3 vee(const Mat3& m);

bool is_rotation(const Mat3& R, double tol = kRotationTolerance);
//! Throws unless R is orthonormal with det +1 and p is finite.
void validate_pose(const Pose& pose);

//! Rodrigues exponential; second-order Taylor below |w| = 1e-8.
Mat3 exp_map(const Vec3& w);
//! Principal-branch logarithm, |result| <= pi. Near pi the axis is taken from
//! the largest diagonal entry of the symmetric part.
Vec3 log_map(const Mat3& R);

//! dp_k = p_k - p_{k-1}, w_k = log(R_k R_{k-1}^T); returns poses.size() - 1 increments.
std::vector<PoseIncrement> encode_increments(std::span<const Pose> poses);
//! Composes increments onto `anchor`: p_k = p_{k-1} + dp_k, R_k = exp(w_k) R_{k-1}.
std::vector<Pose> apply_increments(const Pose& anchor, std::span<const PoseIncrement> increments);

PointCloud transform_cloud(const PointCloud& cloud, const Pose& pose);

//! Planar pose: translation (x, y, 0) and rotation theta about +z.
Pose planar_pose(double x, double y, double theta);
//! Heading of a pose whose rotation is about z.
double planar_angle(const Pose& pose);

}  // namespace contactdyn::geom
