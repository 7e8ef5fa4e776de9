#include "rcmteleop/types.hpp"

#include <cmath>

namespace rcmteleop {

Pose Pose::from_matrix(const Eigen::Matrix4d& m) {
  return {m.topLeftCorner<3, 3>(), m.topRightCorner<3, 1>()};
}

Eigen::Matrix4d Pose::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation;
  m.topRightCorner<3, 1>() = position;
  return m;
}

Pose Pose::from_position_quaternion(const Vec3& p, const Eigen::Vector4d& xyzw) {
  Eigen::Quaterniond quat(xyzw[3], xyzw[0], xyzw[1], xyzw[2]);
  quat.normalize();
  return {quat.toRotationMatrix(), p};
}

Eigen::Vector4d Pose::quaternion_xyzw() const {
  Eigen::Quaterniond quat(rotation);
  quat.normalize();
  if (quat.w() < 0.0) {
    quat.coeffs() *= -1.0;
  }
  return {quat.x(), quat.y(), quat.z(), quat.w()};
}

bool is_rotation(const Mat3& r, double tol) {
  if (!r.allFinite()) {
    return false;
  }
  const double ortho = (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff();
  return ortho <= tol && std::abs(r.determinant() - 1.0) <= tol;
}

bool is_valid_pose(const Pose& pose, double tol) {
  return pose.position.allFinite() && is_rotation(pose.rotation, tol);
}

Mat3 reorthonormalize(const Mat3& r) {
  Eigen::JacobiSVD<Mat3> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 out = svd.matrixU() * svd.matrixV().transpose();
  if (out.determinant() < 0.0) {
    Mat3 u = svd.matrixU();
    u.col(2) *= -1.0;
    out = u * svd.matrixV().transpose();
  }
  return out;
}

Pose normalized(const Pose& pose, double tol) {
  const double ortho =
      (pose.rotation.transpose() * pose.rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (ortho <= tol) {
    return pose;
  }
  return {reorthonormalize(pose.rotation), pose.position};
}

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

Vec3 vex(const Mat3& m) {
  return 0.5 * Vec3(m(2, 1) - m(1, 2), m(0, 2) - m(2, 0), m(1, 0) - m(0, 1));
}

Mat3 rotation_from_vector(const Vec3& rotvec) {
  const double angle = rotvec.norm();
  if (angle == 0.0) {
    return Mat3::Identity();
  }
  return Eigen::AngleAxisd(angle, rotvec / angle).toRotationMatrix();
}

}  // namespace rcmteleop
