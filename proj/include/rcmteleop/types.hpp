#pragma once

#include <Eigen/Dense>

namespace rcmteleop {

// 7 arm joints followed by shaft roll, wrist pitch, wrist yaw and gripper.
inline constexpr int kNumJoints = 11;
// Joint vector augmented with the RCM interpolation variable.
inline constexpr int kAugDim = kNumJoints + 1;
// Instrument twist (6) stacked over RCM velocity (3).
inline constexpr int kConstraintDim = 9;

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using JointVector = Eigen::Matrix<double, kNumJoints, 1>;
using AugVector = Eigen::Matrix<double, kAugDim, 1>;
using AugTwist = Eigen::Matrix<double, kConstraintDim, 1>;
using Jacobian3 = Eigen::Matrix<double, 3, kNumJoints>;
using Jacobian6 = Eigen::Matrix<double, 6, kNumJoints>;
using RcmJacobian = Eigen::Matrix<double, 3, kAugDim>;
using TotalJacobian = Eigen::Matrix<double, kConstraintDim, kAugDim>;
using NullProjector = Eigen::Matrix<double, kAugDim, kAugDim>;

/// Rigid transform. Positions are in meters.
struct Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 position = Vec3::Zero();

  static Pose identity() { return {}; }
  static Pose from_matrix(const Eigen::Matrix4d& m);

  Pose operator*(const Pose& rhs) const {
    return {rotation * rhs.rotation, rotation * rhs.position + position};
  }
  Pose inverse() const {
    const Mat3 rt = rotation.transpose();
    return {rt, -(rt * position)};
  }
  Vec3 apply(const Vec3& p) const { return rotation * p + position; }
  Eigen::Matrix4d matrix() const;

  // Quaternion helpers use the (x, y, z, w) wire order.
  static Pose from_position_quaternion(const Vec3& p, const Eigen::Vector4d& xyzw);
  Eigen::Vector4d quaternion_xyzw() const;
};

/// 6-vector of linear (m/s) and angular (rad/s) velocity.
struct Twist {
  Vec3 linear = Vec3::Zero();
  Vec3 angular = Vec3::Zero();

  Vec6 stacked() const {
    Vec6 out;
    out << linear, angular;
    return out;
  }
  bool is_finite() const { return linear.allFinite() && angular.allFinite(); }
};

bool is_rotation(const Mat3& r, double tol = 1e-9);
bool is_valid_pose(const Pose& pose, double tol = 1e-9);

/// Nearest rotation in the Frobenius sense (SVD projection).
Mat3 reorthonormalize(const Mat3& r);

/// Re-projects the rotation block when its orthonormality error exceeds tol.
Pose normalized(const Pose& pose, double tol = 1e-9);

Mat3 skew(const Vec3& v);

/// Inverse of skew(): picks the axial vector of the antisymmetric part.
Vec3 vex(const Mat3& m);

/// Rotation from a rotation vector (axis * angle).
Mat3 rotation_from_vector(const Vec3& rotvec);

}  // namespace rcmteleop
