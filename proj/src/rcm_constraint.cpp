#include "rcmteleop/rcm_constraint.hpp"

#include <cmath>
#include <string>

#include "rcmteleop/errors.hpp"

namespace rcmteleop {

namespace {

void require_shape(const Eigen::Ref<const Eigen::MatrixXd>& m, Eigen::Index rows, Eigen::Index cols,
                   const char* what) {
  if (m.rows() != rows || m.cols() != cols) {
    throw InvalidInput(std::string(what) + ": expected " + std::to_string(rows) + "x" +
                       std::to_string(cols) + ", got " + std::to_string(m.rows()) + "x" +
                       std::to_string(m.cols()));
  }
}

}  // namespace

Vec3 rcm_position(const Vec3& p_end, const Vec3& p_ins, double lambda) {
  if (!p_end.allFinite() || !p_ins.allFinite() || !std::isfinite(lambda)) {
    throw InvalidInput("rcm_position: non-finite input");
  }
  return p_end + lambda * (p_ins - p_end);
}

Vec3 shaft_vector(const Vec3& p_end, const Vec3& p_ins) {
  const Vec3 d = p_ins - p_end;
  if (!d.allFinite()) {
    throw InvalidInput("shaft_vector: non-finite input");
  }
  if (d.norm() < kMinShaftLength) {
    throw DegenerateShaft("shaft_vector: end-effector and instrument points coincide");
  }
  return d;
}

RcmJacobian rcm_jacobian(const Eigen::Ref<const Eigen::MatrixXd>& j_end,
                         const Eigen::Ref<const Eigen::MatrixXd>& j_ins_linear, const Vec3& d_ins,
                         double lambda) {
  require_shape(j_end, 3, kNumJoints, "rcm_jacobian J_end");
  require_shape(j_ins_linear, 3, kNumJoints, "rcm_jacobian J_ins");
  RcmJacobian out;
  out.leftCols<kNumJoints>() = j_end + lambda * (j_ins_linear - j_end);
  out.col(kNumJoints) = d_ins;
  return out;
}

TotalJacobian total_jacobian(const Eigen::Ref<const Eigen::MatrixXd>& j_ins,
                             const Eigen::Ref<const Eigen::MatrixXd>& j_rcm) {
  require_shape(j_ins, 6, kNumJoints, "total_jacobian J_ins");
  require_shape(j_rcm, 3, kAugDim, "total_jacobian J_rcm");
  TotalJacobian out = TotalJacobian::Zero();
  out.topLeftCorner<6, kNumJoints>() = j_ins;
  out.bottomRows<3>() = j_rcm;
  return out;
}

AugTwist augmented_twist(const Twist& xi_ins, const Vec3& p_rcm_dot) {
  if (!xi_ins.is_finite() || !p_rcm_dot.allFinite()) {
    throw InvalidInput("augmented_twist: non-finite input");
  }
  AugTwist out;
  out << xi_ins.linear, xi_ins.angular, p_rcm_dot;
  return out;
}

AugmentedTwistParts split_augmented_twist(const AugTwist& xi_aug) {
  return {{xi_aug.segment<3>(0), xi_aug.segment<3>(3)}, xi_aug.segment<3>(6)};
}

RcmContext build_rcm_context(const KinematicSnapshot& snap, double lambda, const Twist& xi_ins,
                             const Vec3& p_rcm_dot) {
  RcmContext ctx;
  ctx.p_end = snap.p_end;
  ctx.p_ins = snap.instrument.position;
  ctx.d_ins = shaft_vector(ctx.p_end, ctx.p_ins);
  ctx.p_rcm = rcm_position(ctx.p_end, ctx.p_ins, lambda);
  ctx.j_rcm = rcm_jacobian(snap.j_end, snap.j_ins.topRows<3>(), ctx.d_ins, lambda);
  ctx.j_total = total_jacobian(snap.j_ins, ctx.j_rcm);
  ctx.xi_aug = augmented_twist(xi_ins, p_rcm_dot);
  return ctx;
}

}  // namespace rcmteleop
