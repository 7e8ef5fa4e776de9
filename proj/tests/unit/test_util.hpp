#pragma once

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "oracles.hpp"
#include "rcmteleop/kinematics.hpp"
#include "rcmteleop/rcm_constraint.hpp"
#include "rcmteleop/types.hpp"

namespace testutil {

using namespace rcmteleop;

inline const KinematicChain& chain() {
  static const KinematicChain c = KinematicChain::load(oracle::default_chain_path());
  return c;
}

inline const oracle::OracleChain& ochain() {
  static const oracle::OracleChain c = oracle::load_chain(oracle::default_chain_path());
  return c;
}

/// Home plus a uniform perturbation, kept inside the joint limits.
inline JointVector random_q(std::mt19937_64& rng, double spread = 0.5) {
  std::uniform_real_distribution<double> u(-spread, spread);
  const KinematicChain& c = chain();
  JointVector q = c.home();
  for (int i = 0; i < kNumJoints; ++i) {
    q[i] = std::clamp(q[i] + u(rng), c.joint(i + 1).limits.lower, c.joint(i + 1).limits.upper);
  }
  return q;
}

inline Vec3 random_vec(std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  return {u(rng), u(rng), u(rng)};
}

inline Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Vec3 v(n(rng), n(rng), n(rng));
  return v.normalized();
}

/// Uniformly distributed rotation (normalized Gaussian quaternion), built with
/// the oracle Rodrigues formula.
inline Mat3 random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Vector4d quat(n(rng), n(rng), n(rng), n(rng));
  quat.normalize();
  const Vec3 v = quat.tail<3>();
  const double angle = 2.0 * std::atan2(v.norm(), quat[0]);
  return v.norm() > 0 ? oracle::axis_angle(v.normalized(), angle) : Mat3::Identity();
}

inline Pose random_pose(std::mt19937_64& rng, double scale = 0.5) {
  return {random_rotation(rng), random_vec(rng, scale)};
}

inline oracle::Mat4 to_mat4(const Pose& p) { return oracle::homogeneous(p.rotation, p.position); }

inline double max_abs(const Eigen::MatrixXd& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

inline AugmentedState random_state(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.1, 0.9);
  AugmentedState s;
  s.q = random_q(rng);
  s.lambda = u(rng);
  return s;
}

}  // namespace testutil
