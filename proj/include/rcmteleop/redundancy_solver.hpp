#pragma once

#include <Eigen/Dense>

#include "rcmteleop/kinematics.hpp"
#include "rcmteleop/rcm_constraint.hpp"
#include "rcmteleop/types.hpp"

namespace rcmteleop {

struct SolverConfig {
  /// Singular values at or below svd_cutoff * sigma_max are treated as zero.
  double svd_cutoff = 1e-8;
  /// Damped least squares factor; 0 gives the plain Moore-Penrose inverse.
  double damping = 0.0;
  /// Control period (s).
  double dt = 0.005;
  /// Reference value for the RCM interpolation variable.
  double lambda_ref = 0.4;
  /// Step size along the negative null-space gradient.
  double null_gain = 1.0;

  void validate() const;
};

struct PseudoInverse {
  Eigen::MatrixXd matrix;
  Eigen::VectorXd singular_values;
  int rank = 0;
};

PseudoInverse pseudo_inverse_detailed(const Eigen::Ref<const Eigen::MatrixXd>& m,
                                      const SolverConfig& cfg);
Eigen::MatrixXd pseudo_inverse(const Eigen::Ref<const Eigen::MatrixXd>& m, const SolverConfig& cfg);

/// Gradient of 0.5 (lambda - lambda_ref)^2 with respect to [q; lambda].
AugVector null_space_gradient(double lambda, const SolverConfig& cfg);

/// I - pinv(J) J.
NullProjector null_space_projector(const TotalJacobian& j_total, const SolverConfig& cfg);

struct Resolution {
  AugVector qdot_aug = AugVector::Zero();
  int rank = 0;
  double sigma_min = 0.0;
  /// ||J qdot_aug - xi_aug||_inf
  double residual = 0.0;
};

/// qdot_aug = pinv(J) xi_aug - null_gain (I - pinv(J) J) eta.
/// The minus sign descends the cost whose gradient is eta.
Resolution resolve_detailed(const TotalJacobian& j_total, const AugTwist& xi_aug,
                            const AugVector& eta, const SolverConfig& cfg);
AugVector resolve(const TotalJacobian& j_total, const AugTwist& xi_aug, const AugVector& eta,
                  const SolverConfig& cfg);

struct IntegrationResult {
  AugmentedState state;
  /// Non-finite velocity; state is returned unchanged.
  bool fault = false;
  int clamped_joints = 0;
  bool lambda_clamped = false;
};

/// Explicit Euler step. Lambda is clamped to [kLambdaMin, kLambdaMax]; joint
/// limits are applied when a chain is supplied.
IntegrationResult integrate(const AugmentedState& state, const AugVector& qdot_aug,
                            const SolverConfig& cfg, const KinematicChain* chain = nullptr);

}  // namespace rcmteleop
