#pragma once

#include "rcmteleop/types.hpp"

namespace rcmteleop {

/// Speed limits and error thresholds for the resolved motion-rate law.
struct RateConfig {
  double v_max = 0.05;   // m/s
  double v_min = 0.002;  // m/s
  double w_max = 1.0;    // rad/s
  double w_min = 0.05;   // rad/s
  double gamma_p = 0.0005;  // m
  double gamma_mu = 0.01;   // rad
  double eps_p = 5.0;
  double eps_mu = 5.0;
  double zero_tol_p = 1e-7;   // m
  double zero_tol_mu = 1e-7;  // rad
  /// Use the printed eps/gamma branch threshold instead of gamma*eps.
  bool literal_threshold = false;

  void validate() const;
};

enum class RateKind { linear, angular };

/// p_d - p_c.
Vec3 position_error(const Vec3& p_d, const Vec3& p_c);

/// Axis-angle vector of R_d R_c^T in base coordinates.
Vec3 orientation_error(const Mat3& r_d, const Mat3& r_c);

/// Commanded speed magnitude for an error norm: saturated far from the goal,
/// ramping down from max to min between gamma*eps and gamma.
double speed_schedule(double e_norm, RateKind kind, const RateConfig& cfg);

/// Twist pointing along the error with scheduled magnitude; zero below the
/// zero tolerances.
Twist desired_twist(const Vec3& e_p, const Vec3& e_mu, const RateConfig& cfg);

}  // namespace rcmteleop
