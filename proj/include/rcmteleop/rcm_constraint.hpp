#pragma once

#include "rcmteleop/kinematics.hpp"
#include "rcmteleop/types.hpp"

namespace rcmteleop {

/// Interior range enforced on the RCM interpolation variable.
inline constexpr double kLambdaMin = 0.05;
inline constexpr double kLambdaMax = 0.95;
/// Below this end-effector-to-instrument distance the shaft direction is undefined.
inline constexpr double kMinShaftLength = 1e-3;

struct AugmentedState {
  JointVector q = JointVector::Zero();
  double lambda = 0.4;

  AugVector stacked() const {
    AugVector out;
    out << q, lambda;
    return out;
  }
};

/// p_end + lambda (p_ins - p_end).
Vec3 rcm_position(const Vec3& p_end, const Vec3& p_ins, double lambda);

/// p_ins - p_end. Throws DegenerateShaft when shorter than kMinShaftLength.
Vec3 shaft_vector(const Vec3& p_end, const Vec3& p_ins);

/// [J_end + lambda (J_ins_linear - J_end) | d_ins], mapping [qdot; lambdadot] to
/// the RCM point velocity.
RcmJacobian rcm_jacobian(const Eigen::Ref<const Eigen::MatrixXd>& j_end,
                         const Eigen::Ref<const Eigen::MatrixXd>& j_ins_linear, const Vec3& d_ins,
                         double lambda);

/// Rows 1-6: [J_ins | 0]; rows 7-9: J_rcm.
TotalJacobian total_jacobian(const Eigen::Ref<const Eigen::MatrixXd>& j_ins,
                             const Eigen::Ref<const Eigen::MatrixXd>& j_rcm);

/// [v; w; p_rcm_dot].
AugTwist augmented_twist(const Twist& xi_ins, const Vec3& p_rcm_dot);

struct AugmentedTwistParts {
  Twist xi_ins;
  Vec3 p_rcm_dot;
};
AugmentedTwistParts split_augmented_twist(const AugTwist& xi_aug);

/// Constraint system for one control tick.
struct RcmContext {
  Vec3 p_end;
  Vec3 p_ins;
  Vec3 p_rcm;
  Vec3 d_ins;
  RcmJacobian j_rcm;
  TotalJacobian j_total;
  AugTwist xi_aug;
};

RcmContext build_rcm_context(const KinematicSnapshot& snap, double lambda, const Twist& xi_ins,
                             const Vec3& p_rcm_dot);

}  // namespace rcmteleop
