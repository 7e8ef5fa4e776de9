#include "rcmteleop/admittance.hpp"

#include <cmath>
#include <numbers>

#include "rcmteleop/errors.hpp"
#include "rcmteleop/rcm_constraint.hpp"

namespace rcmteleop {

void AdmittanceConfig::validate() const {
  if (!(k_adm >= 0.0) || !std::isfinite(k_adm)) {
    throw ConfigError("admittance.k_adm must be non-negative");
  }
  if (!f_desired.allFinite()) {
    throw ConfigError("admittance.f_desired must be finite");
  }
  if (!(filter_cutoff_hz >= 0.0)) {
    throw ConfigError("admittance.filter_cutoff_hz must be non-negative");
  }
}

Vec3 shaft_direction(const Vec3& d_ins) {
  const double len = d_ins.norm();
  if (!std::isfinite(len)) {
    throw InvalidInput("shaft_direction: non-finite input");
  }
  if (len < kMinShaftLength) {
    throw DegenerateShaft("shaft_direction: shaft shorter than minimum length");
  }
  return d_ins / len;
}

Mat3 projector(const Vec3& n_d) {
  if (!n_d.allFinite() || std::abs(n_d.norm() - 1.0) > 1e-6) {
    throw InvalidInput("projector: direction must be a unit vector");
  }
  return n_d * n_d.transpose();
}

Vec3 force_error(const Vec3& f_hat, const Vec3& f_desired) { return f_hat - f_desired; }

Vec3 admittance_velocity(const AdmittanceConfig& cfg, const Mat3& omega, const Vec3& f_e) {
  return cfg.k_adm * (f_e - omega * f_e);
}

Mat3 projected_gain(const AdmittanceConfig& cfg, const Mat3& omega) {
  return cfg.k_adm * (Mat3::Identity() - omega);
}

Vec3 ForceFilter::update(const Vec3& sample, double dt) {
  if (!enabled()) {
    return sample;
  }
  if (!primed_) {
    state_ = sample;
    primed_ = true;
    return state_;
  }
  const double rc = 1.0 / (2.0 * std::numbers::pi * cutoff_hz_);
  const double alpha = dt / (rc + dt);
  state_ += alpha * (sample - state_);
  return state_;
}

}  // namespace rcmteleop
