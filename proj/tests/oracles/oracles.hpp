#pragma once

// Reference implementations for tests. Nothing here calls into the library's
// kinematics, solver or mapping code; chain data is read straight from JSON.

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Mat4 = Eigen::Matrix4d;
using Mat3 = Eigen::Matrix3d;
using Vec3 = Eigen::Vector3d;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

struct OracleReport {
  std::string case_id;
  double max_abs_error = 0.0;
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

/// Rotation about a unit axis by angle (hand-written Rodrigues).
Mat3 axis_angle(const Vec3& axis, double angle);
/// Rotation from a rotation vector (axis * angle).
Mat3 rotvec(const Vec3& v);
Mat4 homogeneous(const Mat3& r, const Vec3& p);
Mat4 translation(const Vec3& p);

struct OracleJoint {
  bool prismatic = false;
  Vec3 axis;
  Vec3 translation;
  Vec3 rotation;  // rotation vector of the fixed transform
};

struct OracleChain {
  std::vector<OracleJoint> joints;
  int end_effector_index = 7;
  int instrument_index = 11;
  int gripper_index = 11;
  VecX home;
};

OracleChain load_chain(const std::filesystem::path& path);
std::filesystem::path default_chain_path();

/// Straight product of 4x4 matrices: T_k = prod_{i<=k} Fixed_i * Motion_i(q_i).
/// The gripper joint moves nothing. Returns frames 1..n (element k-1 is frame k).
std::vector<Mat4> fk(const OracleChain& chain, const VecX& q);

/// Central-difference 6xN Jacobian of a frame pose: position rows from the
/// positional difference, angular rows from the rotation log of R(+h) R(-h)^T.
using PoseFn = std::function<Mat4(const VecX&)>;
MatX fd_jacobian(const PoseFn& pose, const VecX& q, double step);
MatX fd_jacobian(const OracleChain& chain, const VecX& q, int frame, double step);

/// Central-difference Jacobian of a point-valued function.
using PointFn = std::function<Vec3(const VecX&)>;
MatX fd_point_jacobian(const PointFn& f, const VecX& x, double step);

/// Unit quaternion (w, x, y, z) from a rotation matrix, Shepperd's method.
Eigen::Vector4d quat_from_matrix(const Mat3& r);
/// Axis * angle of a rotation via its quaternion, angle in [0, pi].
Vec3 rotation_log(const Mat3& r);
/// Axis * angle of R_d R_c^T.
Vec3 quat_log_error(const Mat3& r_d, const Mat3& r_c);
double rotation_angle(const Mat3& r);

Vec3 closest_point_on_segment(const Vec3& a, const Vec3& b, const Vec3& p);
double distance_to_line(const Vec3& a, const Vec3& b, const Vec3& p);

/// The four Moore-Penrose identities, each measured as a max-abs residual.
OracleReport mp_identities(const MatX& m, const MatX& m_pinv, double tol,
                           const std::string& case_id = "mp");

/// Error report over two equally shaped matrices: abs and |a-b|/(1+|b|).
OracleReport compare(const MatX& actual, const MatX& expected, double tol,
                     const std::string& case_id);

}  // namespace oracle
