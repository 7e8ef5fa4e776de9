#pragma once

#include "rcmteleop/types.hpp"

namespace rcmteleop {

struct AdmittanceConfig {
  /// Admittance gain, m/(s N).
  double k_adm = 0.02;
  /// Desired trocar interaction force (N).
  Vec3 f_desired = Vec3::Zero();
  /// First-order low-pass cutoff on the force estimate; 0 disables filtering.
  double filter_cutoff_hz = 10.0;

  void validate() const;
};

struct ForceEstimate {
  Vec3 f_hat = Vec3::Zero();
  double timestamp = 0.0;
};

/// d_ins / ||d_ins||; throws DegenerateShaft below kMinShaftLength.
Vec3 shaft_direction(const Vec3& d_ins);

/// Omega = n n^T. Throws InvalidInput if n is not unit length within 1e-6.
Mat3 projector(const Vec3& n_d);

Vec3 force_error(const Vec3& f_hat, const Vec3& f_desired);

/// K_adm (I - Omega) f_e: the RCM moves only in the plane normal to the shaft.
Vec3 admittance_velocity(const AdmittanceConfig& cfg, const Mat3& omega, const Vec3& f_e);

/// K_adm (I - Omega).
Mat3 projected_gain(const AdmittanceConfig& cfg, const Mat3& omega);

/// Discrete first-order low-pass for the force estimate.
class ForceFilter {
 public:
  explicit ForceFilter(double cutoff_hz = 0.0) : cutoff_hz_(cutoff_hz) {}

  Vec3 update(const Vec3& sample, double dt);
  void reset() { primed_ = false; }
  bool enabled() const { return cutoff_hz_ > 0.0; }

 private:
  double cutoff_hz_;
  bool primed_ = false;
  Vec3 state_ = Vec3::Zero();
};

}  // namespace rcmteleop
