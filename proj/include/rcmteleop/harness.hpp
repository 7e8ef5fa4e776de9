#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rcmteleop/admittance.hpp"
#include "rcmteleop/kinematics.hpp"
#include "rcmteleop/redundancy_solver.hpp"
#include "rcmteleop/resolved_rate.hpp"
#include "rcmteleop/sim_env.hpp"
#include "rcmteleop/teleop_mapping.hpp"

namespace rcmteleop {

enum class Mode { scripted, teleop };
enum class Scenario { circle, line, disturbance_sweep, free };

struct TrocarSettings {
  /// Nominal trocar position; unset places it on the shaft at lambda_ref.
  std::optional<Vec3> position;
  double stiffness = 500.0;
  Disturbance disturbance;
  double noise_sigma = 0.05;
};

struct ServerConfig {
  bool enabled = false;
  std::string host = "127.0.0.1";
  int port = 8765;  // 0 picks a free port
  double state_rate_hz = 50.0;
};

struct ExperimentConfig {
  std::optional<std::filesystem::path> chain_path;
  Mode mode = Mode::scripted;
  Scenario scenario = Scenario::circle;
  double duration = 60.0;
  std::uint64_t seed = 1;
  std::filesystem::path output_dir = "out";
  SolverConfig solver;
  AdmittanceConfig admittance;
  RateConfig rate;
  TrocarSettings trocar;
  FrameRegistry teleop;
  CircleParams circle;
  LineParams line;
  std::optional<JointVector> initial_q;
  std::optional<double> initial_lambda;
  int log_decimation = 1;
  bool log_enabled = true;
  ServerConfig server;
  /// Disturbance amplitudes (m) swept by compare in the disturbance_sweep scenario.
  std::vector<double> sweep_amplitudes = {0.005, 0.01, 0.02};

  /// Parses a config document. Relative chain paths resolve against base_dir.
  /// Unknown keys and out-of-range values raise ConfigError.
  static ExperimentConfig from_json(const nlohmann::json& doc,
                                    const std::filesystem::path& base_dir = {});
  static ExperimentConfig load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
  void validate() const;
  /// Number of control ticks, round(duration / dt).
  std::uint64_t ticks() const;
  KinematicChain make_chain() const;
};

std::string to_string(Mode mode);
std::string to_string(Scenario scenario);
Scenario parse_scenario(const std::string& name);

struct MetricsSummary {
  double mean_lateral_deviation = 0.0;
  double max_lateral_deviation = 0.0;
  double rms_tracking_error = 0.0;
  double max_tracking_error = 0.0;
  double rms_force_error = 0.0;
  double mean_force_error = 0.0;
  double lambda_terminal_error = 0.0;
  double tick_time_mean = 0.0;
  double tick_time_p95 = 0.0;
  double tick_time_max = 0.0;
  /// Largest ||J_total qdot_aug - xi_aug||_inf over full-rank ticks.
  double max_constraint_residual = 0.0;
  std::uint64_t rank_deficient_ticks = 0;
  std::uint64_t ticks = 0;
  std::uint64_t joint_limit_events = 0;
  std::uint64_t lambda_clamp_events = 0;

  nlohmann::json to_json() const;
};

/// Quantities computed during one control tick, before the plant update.
struct TickReport {
  Pose desired;
  Twist xi_ins;
  Vec3 p_rcm_dot = Vec3::Zero();
  AugTwist xi_aug = AugTwist::Zero();
  Resolution resolution;
  double compute_seconds = 0.0;
};

/// One control loop instance: desired pose, resolved rate, admittance, RCM
/// constraint, redundancy resolution and the plant step, in that order.
class ControlLoop {
 public:
  explicit ControlLoop(const ExperimentConfig& cfg);

  /// Latest leader sample; used only in teleop mode.
  void submit(const TeleopCommand& cmd) { pending_ = cmd; }

  const TickReport& tick();

  const Simulator& sim() const { return sim_; }
  Simulator& sim() { return sim_; }
  const ExperimentConfig& config() const { return cfg_; }
  const TeleopMapper& mapper() const { return mapper_; }
  const Pose& desired() const { return last_.desired; }
  const Pose& start_pose() const { return trajectory_.start; }
  std::uint64_t ticks_done() const { return ticks_; }

  MetricsSummary summary() const;

 private:
  Pose reference(double t);

  ExperimentConfig cfg_;
  Simulator sim_;
  TrajectoryParams trajectory_;
  TeleopMapper mapper_;
  std::optional<TeleopCommand> pending_;
  TickReport last_;
  std::uint64_t ticks_ = 0;
  std::uint64_t rank_deficient_ = 0;
  double max_residual_ = 0.0;
  std::vector<double> tick_times_;
};

/// Builds the plant for a config: chain, trocar placement and initial state.
Simulator make_simulator(const ExperimentConfig& cfg);

struct RunOutput {
  MetricsSummary summary;
  std::filesystem::path log_path;
};

/// Runs the configured scenario to completion. When write_files is set, writes
/// log.csv, config.json and summary.json under cfg.output_dir.
RunOutput run(const ExperimentConfig& cfg, bool write_files = true);

struct ComparePair {
  double amplitude = 0.0;  // disturbance amplitude norm (m)
  MetricsSummary with_admittance;
  MetricsSummary without_admittance;
  double lateral_ratio = 0.0;  // off / on
  double force_ratio = 0.0;    // off / on
};

/// Paired runs with the configured k_adm and with k_adm = 0. The
/// disturbance_sweep scenario repeats the pair for every sweep amplitude.
/// Writes compare.json under cfg.output_dir when write_files is set.
std::vector<ComparePair> compare(const ExperimentConfig& cfg, bool write_files = true);

nlohmann::json compare_to_json(const std::vector<ComparePair>& pairs);

nlohmann::json pose_to_json(const Pose& pose);
Pose pose_from_json(const nlohmann::json& j);

}  // namespace rcmteleop
