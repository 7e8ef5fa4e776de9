#include "rcmteleop/redundancy_solver.hpp"

#include <algorithm>
#include <cmath>

#include "rcmteleop/errors.hpp"

namespace rcmteleop {

void SolverConfig::validate() const {
  if (!(svd_cutoff > 0.0)) {
    throw ConfigError("solver.svd_cutoff must be positive");
  }
  if (!(damping >= 0.0)) {
    throw ConfigError("solver.damping must be non-negative");
  }
  if (!(dt > 0.0)) {
    throw ConfigError("solver.dt must be positive");
  }
  if (!(lambda_ref > 0.0 && lambda_ref < 1.0)) {
    throw ConfigError("solver.lambda_ref must lie in (0, 1)");
  }
  if (!(null_gain >= 0.0)) {
    throw ConfigError("solver.null_gain must be non-negative");
  }
}

PseudoInverse pseudo_inverse_detailed(const Eigen::Ref<const Eigen::MatrixXd>& m,
                                      const SolverConfig& cfg) {
  PseudoInverse out;
  out.matrix = Eigen::MatrixXd::Zero(m.cols(), m.rows());
  if (m.size() == 0) {
    return out;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  out.singular_values = svd.singularValues();
  const double sigma_max = out.singular_values.size() > 0 ? out.singular_values[0] : 0.0;
  const double threshold = cfg.svd_cutoff * sigma_max;

  Eigen::VectorXd inv = Eigen::VectorXd::Zero(out.singular_values.size());
  for (Eigen::Index i = 0; i < out.singular_values.size(); ++i) {
    const double s = out.singular_values[i];
    if (s <= threshold || s == 0.0) {
      continue;
    }
    ++out.rank;
    inv[i] = cfg.damping > 0.0 ? s / (s * s + cfg.damping * cfg.damping) : 1.0 / s;
  }
  out.matrix = svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
  return out;
}

Eigen::MatrixXd pseudo_inverse(const Eigen::Ref<const Eigen::MatrixXd>& m, const SolverConfig& cfg) {
  return pseudo_inverse_detailed(m, cfg).matrix;
}

AugVector null_space_gradient(double lambda, const SolverConfig& cfg) {
  AugVector eta = AugVector::Zero();
  eta[kAugDim - 1] = lambda - cfg.lambda_ref;
  return eta;
}

NullProjector null_space_projector(const TotalJacobian& j_total, const SolverConfig& cfg) {
  const Eigen::MatrixXd pinv = pseudo_inverse(j_total, cfg);
  return NullProjector::Identity() - pinv * j_total;
}

Resolution resolve_detailed(const TotalJacobian& j_total, const AugTwist& xi_aug,
                            const AugVector& eta, const SolverConfig& cfg) {
  const PseudoInverse pinv = pseudo_inverse_detailed(j_total, cfg);
  const Eigen::Matrix<double, kAugDim, kConstraintDim> jp = pinv.matrix;

  // Apply the projector without forming it: (I - J+ J) eta = eta - J+ (J eta).
  const AugVector projected = eta - jp * (j_total * eta);

  Resolution res;
  res.qdot_aug = jp * xi_aug - cfg.null_gain * projected;
  res.rank = pinv.rank;
  res.sigma_min = pinv.singular_values.size() > 0
                      ? pinv.singular_values[pinv.singular_values.size() - 1]
                      : 0.0;
  res.residual = (j_total * res.qdot_aug - xi_aug).cwiseAbs().maxCoeff();
  return res;
}

AugVector resolve(const TotalJacobian& j_total, const AugTwist& xi_aug, const AugVector& eta,
                  const SolverConfig& cfg) {
  return resolve_detailed(j_total, xi_aug, eta, cfg).qdot_aug;
}

IntegrationResult integrate(const AugmentedState& state, const AugVector& qdot_aug,
                            const SolverConfig& cfg, const KinematicChain* chain) {
  if (!(cfg.dt > 0.0)) {
    throw InvalidInput("integrate: dt must be positive");
  }
  IntegrationResult out;
  out.state = state;
  if (!qdot_aug.allFinite()) {
    out.fault = true;
    return out;
  }

  out.state.q = state.q + qdot_aug.head<kNumJoints>() * cfg.dt;
  const double lambda = state.lambda + qdot_aug[kAugDim - 1] * cfg.dt;
  out.state.lambda = std::clamp(lambda, kLambdaMin, kLambdaMax);
  out.lambda_clamped = out.state.lambda != lambda;

  if (chain != nullptr) {
    for (int i = 0; i < kNumJoints; ++i) {
      const JointLimits& lim = chain->joints()[i].limits;
      const double clamped = std::clamp(out.state.q[i], lim.lower, lim.upper);
      if (clamped != out.state.q[i]) {
        out.state.q[i] = clamped;
        ++out.clamped_joints;
      }
    }
  }
  return out;
}

}  // namespace rcmteleop
