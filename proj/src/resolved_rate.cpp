#include "rcmteleop/resolved_rate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rcmteleop/errors.hpp"

namespace rcmteleop {

namespace {

constexpr double kSmallAngle = 1e-6;
constexpr double kNearPi = std::numbers::pi - 1e-4;

// Near pi both acos and the antisymmetric part are ill-conditioned; go through
// the quaternion instead (Eigen picks the largest diagonal term).
Vec3 log_near_pi(const Mat3& r_e) {
  Eigen::Quaterniond q(r_e);
  if (q.w() < 0.0) {
    q.coeffs() = -q.coeffs();
  }
  const double s = q.vec().norm();
  return 2.0 * std::atan2(s, q.w()) * q.vec() / s;
}

}  // namespace

void RateConfig::validate() const {
  if (!(v_min > 0.0 && v_max >= v_min)) {
    throw ConfigError("resolved_rate: require v_max >= v_min > 0");
  }
  if (!(w_min > 0.0 && w_max >= w_min)) {
    throw ConfigError("resolved_rate: require w_max >= w_min > 0");
  }
  if (!(gamma_p > 0.0 && gamma_mu > 0.0)) {
    throw ConfigError("resolved_rate: gamma thresholds must be positive");
  }
  if (!(eps_p > 1.0 && eps_mu > 1.0)) {
    throw ConfigError("resolved_rate: eps must exceed 1");
  }
  if (!(zero_tol_p >= 0.0 && zero_tol_mu >= 0.0)) {
    throw ConfigError("resolved_rate: zero tolerances must be non-negative");
  }
}

Vec3 position_error(const Vec3& p_d, const Vec3& p_c) { return p_d - p_c; }

Vec3 orientation_error(const Mat3& r_d, const Mat3& r_c) {
  if (!is_rotation(r_d, 1e-6) || !is_rotation(r_c, 1e-6)) {
    throw InvalidInput("orientation_error: inputs must be rotation matrices");
  }
  const Mat3 r_e = r_d * r_c.transpose();
  const double c = std::clamp((r_e.trace() - 1.0) / 2.0, -1.0, 1.0);
  const double theta = std::acos(c);
  // vex() already halves, so 2 vex = [R32 - R23, R13 - R31, R21 - R12].
  const Vec3 diff = 2.0 * vex(r_e);
  if (theta < kSmallAngle) {
    return 0.5 * diff;
  }
  if (theta > kNearPi) {
    return log_near_pi(r_e);
  }
  return theta / (2.0 * std::sin(theta)) * diff;
}

double speed_schedule(double e_norm, RateKind kind, const RateConfig& cfg) {
  const bool linear = kind == RateKind::linear;
  const double s_max = linear ? cfg.v_max : cfg.w_max;
  const double s_min = linear ? cfg.v_min : cfg.w_min;
  const double gamma = linear ? cfg.gamma_p : cfg.gamma_mu;
  const double eps = linear ? cfg.eps_p : cfg.eps_mu;

  const double threshold = cfg.literal_threshold ? eps / gamma : gamma * eps;
  if (e_norm > threshold) {
    return s_max;
  }
  const double beta = (e_norm - gamma) / (gamma * (eps - 1.0));
  return s_min + (s_max - s_min) * std::clamp(beta, 0.0, 1.0);
}

Twist desired_twist(const Vec3& e_p, const Vec3& e_mu, const RateConfig& cfg) {
  Twist xi;
  const double np = e_p.norm();
  if (np > cfg.zero_tol_p) {
    xi.linear = speed_schedule(np, RateKind::linear, cfg) * e_p / np;
  }
  const double nmu = e_mu.norm();
  if (nmu > cfg.zero_tol_mu) {
    xi.angular = speed_schedule(nmu, RateKind::angular, cfg) * e_mu / nmu;
  }
  return xi;
}

}  // namespace rcmteleop
