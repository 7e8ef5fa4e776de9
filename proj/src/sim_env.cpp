#include "rcmteleop/sim_env.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <string>

#include "rcmteleop/errors.hpp"
#include "rcmteleop/resolved_rate.hpp"

namespace rcmteleop {

void TrocarModel::validate() const {
  if (!nominal.allFinite()) {
    throw ConfigError("trocar.position must be finite");
  }
  if (!(stiffness >= 0.0)) {
    throw ConfigError("trocar.stiffness must be non-negative");
  }
  if (!(disturbance.frequency >= 0.0) || !disturbance.amplitude.allFinite()) {
    throw ConfigError("trocar.disturbance must have finite amplitude and frequency >= 0");
  }
  if (!(noise_sigma >= 0.0)) {
    throw ConfigError("trocar.noise_sigma must be non-negative");
  }
}

Vec3 trocar_position(const TrocarModel& model, double t) {
  const Disturbance& d = model.disturbance;
  const double s = std::sin(2.0 * std::numbers::pi * d.frequency * t + d.phase);
  return model.nominal + d.amplitude * s;
}

Vec3 closest_point_on_shaft(const Vec3& p_end, const Vec3& p_ins, const Vec3& point) {
  const Vec3 d = shaft_vector(p_end, p_ins);
  const double s = std::clamp((point - p_end).dot(d) / d.squaredNorm(), 0.0, 1.0);
  return p_end + s * d;
}

Vec3 trocar_force(const Vec3& p_end, const Vec3& p_ins, const Vec3& trocar_now, double k_t) {
  return k_t * (trocar_now - closest_point_on_shaft(p_end, p_ins, trocar_now));
}

Vec3 sense_force(const Vec3& f_true, double noise_sigma, std::mt19937_64& rng) {
  if (noise_sigma <= 0.0) {
    return f_true;
  }
  std::normal_distribution<double> noise(0.0, noise_sigma);
  Vec3 out = f_true;
  for (int i = 0; i < 3; ++i) {
    out[i] += noise(rng);
  }
  return out;
}

double lateral_deviation(const Vec3& p_end, const Vec3& p_ins, const Vec3& trocar_now) {
  const Vec3 n = shaft_vector(p_end, p_ins).normalized();
  const Vec3 r = trocar_now - p_end;
  return (r - n * n.dot(r)).norm();
}

std::string csv_header() {
  std::string h = "t";
  for (int i = 1; i <= kNumJoints; ++i) {
    h += ",q" + std::to_string(i);
  }
  h += ",lambda";
  for (const char* name : {"p_ins", "p_rcm", "trocar", "f_true", "f_hat"}) {
    for (const char* axis : {"_x", "_y", "_z"}) {
      h += std::string(",") + name + axis;
    }
  }
  h += ",lateral_deviation,e_p_norm,e_mu_norm";
  return h;
}

namespace {

void append_number(std::string& out, double value) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  out.append(buf, res.ptr);
}

}  // namespace

std::string csv_row(const LogRecord& rec) {
  std::string row;
  row.reserve(31 * 24);
  append_number(row, rec.t);
  auto field = [&row](double v) {
    row += ',';
    append_number(row, v);
  };
  for (int i = 0; i < kNumJoints; ++i) {
    field(rec.q[i]);
  }
  field(rec.lambda);
  for (const Vec3* v : {&rec.p_ins, &rec.p_rcm, &rec.trocar, &rec.f_true, &rec.f_hat}) {
    field(v->x());
    field(v->y());
    field(v->z());
  }
  field(rec.lateral_deviation);
  field(rec.e_p_norm);
  field(rec.e_mu_norm);
  return row;
}

void RunningMetrics::add(const LogRecord& rec, const Vec3& f_error) {
  ++samples;
  sum_lateral += rec.lateral_deviation;
  max_lateral = std::max(max_lateral, rec.lateral_deviation);
  sum_sq_tracking += rec.e_p_norm * rec.e_p_norm;
  max_tracking = std::max(max_tracking, rec.e_p_norm);
  const double fe = f_error.norm();
  sum_sq_force_error += fe * fe;
  sum_force_error += fe;
}

double RunningMetrics::rms_tracking() const {
  return samples ? std::sqrt(sum_sq_tracking / samples) : 0.0;
}

double RunningMetrics::rms_force_error() const {
  return samples ? std::sqrt(sum_sq_force_error / samples) : 0.0;
}

Simulator::Simulator(KinematicChain chain, TrocarModel trocar, SolverConfig solver,
                     const AdmittanceConfig& admittance, AugmentedState initial, std::uint64_t seed)
    : chain_(std::move(chain)),
      trocar_(std::move(trocar)),
      solver_(solver),
      f_desired_(admittance.f_desired),
      filter_(admittance.filter_cutoff_hz),
      rng_(seed) {
  trocar_.validate();
  solver_.validate();
  state_.aug = initial;
  state_.kin = evaluate(chain_, state_.aug.q);
  sense();
}

void Simulator::sense() {
  const Vec3 p_end = state_.kin.p_end;
  const Vec3 p_ins = state_.kin.instrument.position;
  state_.trocar_now = trocar_position(trocar_, state_.t);
  state_.f_true = trocar_force(p_end, p_ins, state_.trocar_now, trocar_.stiffness);
  state_.f_hat = filter_.update(sense_force(state_.f_true, trocar_.noise_sigma, rng_), solver_.dt);
}

void Simulator::set_gripper(double value) {
  const JointLimits& lim = chain_.joint(chain_.gripper_index()).limits;
  state_.aug.q[chain_.gripper_index() - 1] = std::clamp(value, lim.lower, lim.upper);
}

const SimState& Simulator::step(const AugVector& qdot_aug, const Pose& reference) {
  const IntegrationResult res = integrate(state_.aug, qdot_aug, solver_, &chain_);
  if (res.fault) {
    throw RuntimeFault("simulator: non-finite joint velocity command at t=" +
                       std::to_string(state_.t));
  }
  state_.aug = res.state;
  state_.metrics.joint_limit_events += static_cast<std::uint64_t>(res.clamped_joints);
  state_.metrics.lambda_clamp_events += res.lambda_clamped ? 1U : 0U;

  ++ticks_;
  state_.t = static_cast<double>(ticks_) * solver_.dt;
  state_.kin = evaluate(chain_, state_.aug.q);
  sense();

  LogRecord rec;
  rec.t = state_.t;
  rec.q = state_.aug.q;
  rec.lambda = state_.aug.lambda;
  rec.p_ins = state_.kin.instrument.position;
  rec.p_rcm = rcm_position(state_.kin.p_end, rec.p_ins, state_.aug.lambda);
  rec.trocar = state_.trocar_now;
  rec.f_true = state_.f_true;
  rec.f_hat = state_.f_hat;
  rec.lateral_deviation = lateral_deviation(state_.kin.p_end, rec.p_ins, state_.trocar_now);
  rec.e_p_norm = position_error(reference.position, rec.p_ins).norm();
  rec.e_mu_norm = orientation_error(reference.rotation, state_.kin.instrument.rotation).norm();

  state_.metrics.add(rec, force_error(state_.f_hat, f_desired_));
  if (sink_) {
    sink_(rec);
  }
  return state_;
}

void TrajectoryParams::validate(TrajectoryKind kind) const {
  if (!is_valid_pose(start, 1e-6)) {
    throw InvalidInput("trajectory: invalid start pose");
  }
  if (kind == TrajectoryKind::circle) {
    const bool ok = circle.radius > 0.0 && circle.period > 0.0 &&
                    std::abs(circle.u.norm() - 1.0) < 1e-9 && std::abs(circle.v.norm() - 1.0) < 1e-9 &&
                    std::abs(circle.u.dot(circle.v)) < 1e-9;
    if (!ok) {
      throw InvalidInput("trajectory: circle needs radius > 0, period > 0 and orthonormal u, v");
    }
  } else {
    const bool ok = line.length > 0.0 && line.duration > 0.0 &&
                    std::abs(line.direction.norm() - 1.0) < 1e-9;
    if (!ok) {
      throw InvalidInput("trajectory: line needs length > 0, duration > 0 and a unit direction");
    }
  }
}

Pose scripted_trajectory(TrajectoryKind kind, const TrajectoryParams& params, double t) {
  params.validate(kind);
  if (!(t >= 0.0)) {
    throw InvalidInput("trajectory: time must be non-negative");
  }
  Pose out = params.start;
  if (kind == TrajectoryKind::circle) {
    const CircleParams& c = params.circle;
    const double phi = 2.0 * std::numbers::pi * t / c.period;
    const Vec3 center = params.start.position - c.radius * c.u;
    out.position = center + c.radius * (std::cos(phi) * c.u + std::sin(phi) * c.v);
    if (t == 0.0) {
      out.position = params.start.position;
    }
  } else {
    const LineParams& l = params.line;
    const double s = std::min(t / l.duration, 1.0);
    out.position = params.start.position + (s * l.length) * l.direction;
  }
  return out;
}

}  // namespace rcmteleop
