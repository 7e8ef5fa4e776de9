#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string_view>

#include "rcmteleop/admittance.hpp"
#include "rcmteleop/kinematics.hpp"
#include "rcmteleop/rcm_constraint.hpp"
#include "rcmteleop/redundancy_solver.hpp"
#include "rcmteleop/types.hpp"

namespace rcmteleop {

struct Disturbance {
  Vec3 amplitude = Vec3::Zero();  // m
  double frequency = 0.0;         // Hz
  double phase = 0.0;             // rad
};

/// Synthetic trocar: a lateral spring pulling the shaft toward a (moving) port.
struct TrocarModel {
  Vec3 nominal = Vec3::Zero();
  double stiffness = 500.0;    // N/m
  Disturbance disturbance;
  double noise_sigma = 0.05;   // N, per axis

  void validate() const;
};

/// nominal + amplitude .* sin(2 pi f t + phase).
Vec3 trocar_position(const TrocarModel& model, double t);

/// Closest point on segment [a, b] to p.
Vec3 closest_point_on_shaft(const Vec3& p_end, const Vec3& p_ins, const Vec3& point);

/// k_t (trocar - c), c the closest shaft point: tissue pushes the shaft toward the port.
Vec3 trocar_force(const Vec3& p_end, const Vec3& p_ins, const Vec3& trocar_now, double k_t);

/// f_true plus independent N(0, sigma) noise per axis.
Vec3 sense_force(const Vec3& f_true, double noise_sigma, std::mt19937_64& rng);

/// Distance from the trocar to the infinite line through p_end and p_ins.
double lateral_deviation(const Vec3& p_end, const Vec3& p_ins, const Vec3& trocar_now);

/// One row of the run log. Column order is fixed by write_csv_header().
struct LogRecord {
  double t = 0.0;
  JointVector q = JointVector::Zero();
  double lambda = 0.0;
  Vec3 p_ins = Vec3::Zero();
  Vec3 p_rcm = Vec3::Zero();
  Vec3 trocar = Vec3::Zero();
  Vec3 f_true = Vec3::Zero();
  Vec3 f_hat = Vec3::Zero();
  double lateral_deviation = 0.0;
  double e_p_norm = 0.0;
  double e_mu_norm = 0.0;
};

std::string csv_header();
/// Shortest round-trip formatting; identical inputs give identical bytes.
std::string csv_row(const LogRecord& rec);

/// Running aggregates over logged ticks.
struct RunningMetrics {
  std::uint64_t samples = 0;
  double sum_lateral = 0.0;
  double max_lateral = 0.0;
  double sum_sq_tracking = 0.0;
  double max_tracking = 0.0;
  double sum_sq_force_error = 0.0;
  double sum_force_error = 0.0;
  std::uint64_t joint_limit_events = 0;
  std::uint64_t lambda_clamp_events = 0;

  void add(const LogRecord& rec, const Vec3& f_error);
  double mean_lateral() const { return samples ? sum_lateral / samples : 0.0; }
  double rms_tracking() const;
  double rms_force_error() const;
  double mean_force_error() const { return samples ? sum_force_error / samples : 0.0; }
};

struct SimState {
  AugmentedState aug;
  double t = 0.0;
  Vec3 trocar_now = Vec3::Zero();
  Vec3 f_true = Vec3::Zero();
  Vec3 f_hat = Vec3::Zero();
  KinematicSnapshot kin;
  RunningMetrics metrics;
};

/// Kinematic plant: integrates commanded joint rates and synthesizes the
/// trocar interaction force. Owns its RNG, so (seed, config) fixes every value.
class Simulator {
 public:
  using LogSink = std::function<void(const LogRecord&)>;

  Simulator(KinematicChain chain, TrocarModel trocar, SolverConfig solver,
            const AdmittanceConfig& admittance, AugmentedState initial, std::uint64_t seed);

  const SimState& state() const { return state_; }
  const KinematicChain& chain() const { return chain_; }
  const TrocarModel& trocar() const { return trocar_; }
  const SolverConfig& solver() const { return solver_; }

  void set_log_sink(LogSink sink) { sink_ = std::move(sink); }

  /// Sets the gripper joint directly (pass-through channel, clamped to limits).
  void set_gripper(double value);

  /// Advances one control period. The tracking error in the log row is
  /// measured against `reference` after the update. Throws RuntimeFault when
  /// the command is not finite (state left unchanged).
  const SimState& step(const AugVector& qdot_aug, const Pose& reference);

 private:
  void sense();

  KinematicChain chain_;
  TrocarModel trocar_;
  SolverConfig solver_;
  Vec3 f_desired_;
  ForceFilter filter_;
  std::mt19937_64 rng_;
  std::uint64_t ticks_ = 0;
  SimState state_;
  LogSink sink_;
};

enum class TrajectoryKind { circle, line };

/// Circle in the plane spanned by u, v; starts at the start pose.
struct CircleParams {
  double radius = 0.10;
  double period = 60.0;
  Vec3 u = Vec3::UnitX();
  Vec3 v = Vec3::UnitY();
};

/// Straight segment from the start pose along `direction`, then hold.
struct LineParams {
  double length = 0.20;
  double duration = 20.0;
  Vec3 direction = Vec3::UnitY();
};

struct TrajectoryParams {
  Pose start;
  CircleParams circle;
  LineParams line;

  void validate(TrajectoryKind kind) const;
};

Pose scripted_trajectory(TrajectoryKind kind, const TrajectoryParams& params, double t);

}  // namespace rcmteleop
