#include "rcmteleop/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include "rcmteleop/errors.hpp"
#include "rcmteleop/rcm_constraint.hpp"

namespace rcmteleop {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) {
    throw ConfigError(where + ": expected an object");
  }
  const std::set<std::string> names(allowed.begin(), allowed.end());
  for (const auto& item : j.items()) {
    if (!names.count(item.key())) {
      throw ConfigError(where + ": unknown key '" + item.key() + "'");
    }
  }
}

double read_number(const json& j, const char* key, double fallback, const std::string& where) {
  if (!j.contains(key)) {
    return fallback;
  }
  const json& v = j.at(key);
  if (!v.is_number()) {
    throw ConfigError(where + "." + key + " must be a number");
  }
  const double out = v.get<double>();
  if (!std::isfinite(out)) {
    throw ConfigError(where + "." + key + " must be finite");
  }
  return out;
}

bool read_bool(const json& j, const char* key, bool fallback, const std::string& where) {
  if (!j.contains(key)) {
    return fallback;
  }
  if (!j.at(key).is_boolean()) {
    throw ConfigError(where + "." + key + " must be a boolean");
  }
  return j.at(key).get<bool>();
}

std::string read_string(const json& j, const char* key, const std::string& fallback,
                        const std::string& where) {
  if (!j.contains(key)) {
    return fallback;
  }
  if (!j.at(key).is_string()) {
    throw ConfigError(where + "." + key + " must be a string");
  }
  return j.at(key).get<std::string>();
}

Eigen::VectorXd number_array(const json& v, Eigen::Index n, const std::string& where) {
  if (!v.is_array() || static_cast<Eigen::Index>(v.size()) != n) {
    throw ConfigError(where + " must be an array of " + std::to_string(n) + " numbers");
  }
  Eigen::VectorXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!v[i].is_number() || !std::isfinite(v[i].get<double>())) {
      throw ConfigError(where + " must contain finite numbers");
    }
    out[i] = v[i].get<double>();
  }
  return out;
}

Vec3 read_vec3(const json& j, const char* key, const Vec3& fallback, const std::string& where) {
  if (!j.contains(key)) {
    return fallback;
  }
  return number_array(j.at(key), 3, where + "." + key);
}

json vec_json(const Eigen::Ref<const Eigen::VectorXd>& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    out.push_back(v[i]);
  }
  return out;
}

const json& section(const json& doc, const char* key) {
  static const json empty = json::object();
  return doc.contains(key) ? doc.at(key) : empty;
}

Mode parse_mode(const std::string& name) {
  if (name == "scripted") return Mode::scripted;
  if (name == "teleop") return Mode::teleop;
  throw ConfigError("mode must be 'scripted' or 'teleop', got '" + name + "'");
}

SimilarityMode parse_similarity(const std::string& name) {
  if (name == "rotation_only") return SimilarityMode::rotation_only;
  if (name == "full") return SimilarityMode::full;
  throw ConfigError("teleop.similarity must be 'rotation_only' or 'full', got '" + name + "'");
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) {
    return 0.0;
  }
  const auto k = static_cast<std::size_t>(std::ceil(p * static_cast<double>(values.size()))) - 1;
  const auto idx = std::min(k, values.size() - 1);
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(idx), values.end());
  return values[idx];
}

void write_json_file(const fs::path& path, const json& doc) {
  std::ofstream out(path);
  if (!out) {
    throw RuntimeFault("cannot write " + path.string());
  }
  out << doc.dump(2) << '\n';
}

}  // namespace

std::string to_string(Mode mode) { return mode == Mode::scripted ? "scripted" : "teleop"; }

std::string to_string(Scenario scenario) {
  switch (scenario) {
    case Scenario::circle: return "circle";
    case Scenario::line: return "line";
    case Scenario::disturbance_sweep: return "disturbance_sweep";
    case Scenario::free: return "free";
  }
  return "circle";
}

Scenario parse_scenario(const std::string& name) {
  if (name == "circle") return Scenario::circle;
  if (name == "line") return Scenario::line;
  if (name == "disturbance_sweep") return Scenario::disturbance_sweep;
  if (name == "free") return Scenario::free;
  throw ConfigError("scenario must be circle, line, disturbance_sweep or free, got '" + name + "'");
}

json pose_to_json(const Pose& pose) {
  return {{"position", vec_json(pose.position)}, {"quaternion", vec_json(pose.quaternion_xyzw())}};
}

Pose pose_from_json(const json& j) {
  check_keys(j, {"position", "quaternion"}, "pose");
  const Vec3 p = read_vec3(j, "position", Vec3::Zero(), "pose");
  Eigen::Vector4d quat(0.0, 0.0, 0.0, 1.0);
  if (j.contains("quaternion")) {
    quat = number_array(j.at("quaternion"), 4, "pose.quaternion");
  }
  if (std::abs(quat.norm() - 1.0) > 1e-3) {
    throw ConfigError("pose.quaternion must be unit length [x, y, z, w]");
  }
  return Pose::from_position_quaternion(p, quat);
}

ExperimentConfig ExperimentConfig::from_json(const json& doc, const fs::path& base_dir) {
  ExperimentConfig cfg;
  try {
    check_keys(doc, {"chain", "mode", "scenario", "duration", "seed", "output_dir", "solver",
                     "admittance", "resolved_rate", "trocar", "teleop", "trajectory", "initial",
                     "log", "server", "compare"},
               "config");
    if (doc.contains("chain") && !doc.at("chain").is_null()) {
      fs::path p = read_string(doc, "chain", "", "config");
      cfg.chain_path = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
    }
    cfg.mode = parse_mode(read_string(doc, "mode", to_string(cfg.mode), "config"));
    cfg.scenario = parse_scenario(read_string(doc, "scenario", to_string(cfg.scenario), "config"));
    cfg.duration = read_number(doc, "duration", cfg.duration, "config");
    if (doc.contains("seed")) {
      const json& seed = doc.at("seed");
      if (!seed.is_number_integer() || (!seed.is_number_unsigned() && seed.get<std::int64_t>() < 0)) {
        throw ConfigError("config.seed must be a non-negative integer");
      }
      cfg.seed = doc.at("seed").get<std::uint64_t>();
    }
    cfg.output_dir = read_string(doc, "output_dir", cfg.output_dir.string(), "config");

    const json& s = section(doc, "solver");
    check_keys(s, {"svd_cutoff", "damping", "dt", "lambda_ref", "null_gain"}, "solver");
    cfg.solver.svd_cutoff = read_number(s, "svd_cutoff", cfg.solver.svd_cutoff, "solver");
    cfg.solver.damping = read_number(s, "damping", cfg.solver.damping, "solver");
    cfg.solver.dt = read_number(s, "dt", cfg.solver.dt, "solver");
    cfg.solver.lambda_ref = read_number(s, "lambda_ref", cfg.solver.lambda_ref, "solver");
    cfg.solver.null_gain = read_number(s, "null_gain", cfg.solver.null_gain, "solver");

    const json& a = section(doc, "admittance");
    check_keys(a, {"k_adm", "f_desired", "filter_cutoff_hz"}, "admittance");
    cfg.admittance.k_adm = read_number(a, "k_adm", cfg.admittance.k_adm, "admittance");
    cfg.admittance.f_desired = read_vec3(a, "f_desired", cfg.admittance.f_desired, "admittance");
    cfg.admittance.filter_cutoff_hz =
        read_number(a, "filter_cutoff_hz", cfg.admittance.filter_cutoff_hz, "admittance");

    const json& r = section(doc, "resolved_rate");
    check_keys(r, {"v_max", "v_min", "w_max", "w_min", "gamma_p", "gamma_mu", "eps_p", "eps_mu",
                   "zero_tol_p", "zero_tol_mu", "literal_threshold"},
               "resolved_rate");
    RateConfig& rc = cfg.rate;
    rc.v_max = read_number(r, "v_max", rc.v_max, "resolved_rate");
    rc.v_min = read_number(r, "v_min", rc.v_min, "resolved_rate");
    rc.w_max = read_number(r, "w_max", rc.w_max, "resolved_rate");
    rc.w_min = read_number(r, "w_min", rc.w_min, "resolved_rate");
    rc.gamma_p = read_number(r, "gamma_p", rc.gamma_p, "resolved_rate");
    rc.gamma_mu = read_number(r, "gamma_mu", rc.gamma_mu, "resolved_rate");
    rc.eps_p = read_number(r, "eps_p", rc.eps_p, "resolved_rate");
    rc.eps_mu = read_number(r, "eps_mu", rc.eps_mu, "resolved_rate");
    rc.zero_tol_p = read_number(r, "zero_tol_p", rc.zero_tol_p, "resolved_rate");
    rc.zero_tol_mu = read_number(r, "zero_tol_mu", rc.zero_tol_mu, "resolved_rate");
    rc.literal_threshold = read_bool(r, "literal_threshold", rc.literal_threshold, "resolved_rate");

    const json& t = section(doc, "trocar");
    check_keys(t, {"position", "stiffness", "disturbance", "noise_sigma"}, "trocar");
    if (t.contains("position") && !t.at("position").is_null()) {
      cfg.trocar.position = read_vec3(t, "position", Vec3::Zero(), "trocar");
    }
    cfg.trocar.stiffness = read_number(t, "stiffness", cfg.trocar.stiffness, "trocar");
    cfg.trocar.noise_sigma = read_number(t, "noise_sigma", cfg.trocar.noise_sigma, "trocar");
    const json& d = section(t, "disturbance");
    check_keys(d, {"amplitude", "frequency", "phase"}, "trocar.disturbance");
    Disturbance& dist = cfg.trocar.disturbance;
    dist.amplitude = read_vec3(d, "amplitude", dist.amplitude, "trocar.disturbance");
    dist.frequency = read_number(d, "frequency", dist.frequency, "trocar.disturbance");
    dist.phase = read_number(d, "phase", dist.phase, "trocar.disturbance");

    const json& tp = section(doc, "teleop");
    check_keys(tp, {"base_T_haptic", "motion_scale", "similarity"}, "teleop");
    if (tp.contains("base_T_haptic")) {
      cfg.teleop.base_T_haptic = pose_from_json(tp.at("base_T_haptic"));
    }
    cfg.teleop.motion_scale = read_number(tp, "motion_scale", cfg.teleop.motion_scale, "teleop");
    cfg.teleop.similarity = parse_similarity(read_string(tp, "similarity", "rotation_only", "teleop"));

    const json& tr = section(doc, "trajectory");
    check_keys(tr, {"circle", "line"}, "trajectory");
    const json& c = section(tr, "circle");
    check_keys(c, {"radius", "period", "u", "v"}, "trajectory.circle");
    cfg.circle.radius = read_number(c, "radius", cfg.circle.radius, "trajectory.circle");
    cfg.circle.period = read_number(c, "period", cfg.circle.period, "trajectory.circle");
    cfg.circle.u = read_vec3(c, "u", cfg.circle.u, "trajectory.circle");
    cfg.circle.v = read_vec3(c, "v", cfg.circle.v, "trajectory.circle");
    const json& l = section(tr, "line");
    check_keys(l, {"length", "duration", "direction"}, "trajectory.line");
    cfg.line.length = read_number(l, "length", cfg.line.length, "trajectory.line");
    cfg.line.duration = read_number(l, "duration", cfg.line.duration, "trajectory.line");
    cfg.line.direction = read_vec3(l, "direction", cfg.line.direction, "trajectory.line");

    const json& init = section(doc, "initial");
    check_keys(init, {"q", "lambda"}, "initial");
    if (init.contains("q") && !init.at("q").is_null()) {
      cfg.initial_q = JointVector(number_array(init.at("q"), kNumJoints, "initial.q"));
    }
    if (init.contains("lambda") && !init.at("lambda").is_null()) {
      cfg.initial_lambda = read_number(init, "lambda", 0.4, "initial");
    }

    const json& lg = section(doc, "log");
    check_keys(lg, {"enabled", "decimation"}, "log");
    cfg.log_enabled = read_bool(lg, "enabled", cfg.log_enabled, "log");
    const double dec = read_number(lg, "decimation", cfg.log_decimation, "log");
    if (dec != std::floor(dec) || dec < 1.0 || dec > 1e6) {
      throw ConfigError("log.decimation must be a positive integer");
    }
    cfg.log_decimation = static_cast<int>(dec);

    const json& sv = section(doc, "server");
    check_keys(sv, {"enabled", "host", "port", "state_rate_hz"}, "server");
    cfg.server.enabled = read_bool(sv, "enabled", cfg.server.enabled, "server");
    cfg.server.host = read_string(sv, "host", cfg.server.host, "server");
    const double port = read_number(sv, "port", cfg.server.port, "server");
    if (port != std::floor(port) || port < 0 || port > 65535) {
      throw ConfigError("server.port must be an integer in [0, 65535]");
    }
    cfg.server.port = static_cast<int>(port);
    cfg.server.state_rate_hz = read_number(sv, "state_rate_hz", cfg.server.state_rate_hz, "server");

    const json& cmp = section(doc, "compare");
    check_keys(cmp, {"amplitudes"}, "compare");
    if (cmp.contains("amplitudes")) {
      const json& amps = cmp.at("amplitudes");
      if (!amps.is_array() || amps.empty()) {
        throw ConfigError("compare.amplitudes must be a non-empty array");
      }
      cfg.sweep_amplitudes.clear();
      for (const auto& v : amps) {
        if (!v.is_number()) {
          throw ConfigError("compare.amplitudes must contain numbers");
        }
        cfg.sweep_amplitudes.push_back(v.get<double>());
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config file " + path.string());
  }
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return from_json(doc, path.parent_path());
}

json ExperimentConfig::to_json() const {
  json doc;
  doc["chain"] = chain_path ? json(chain_path->string()) : json(nullptr);
  doc["mode"] = to_string(mode);
  doc["scenario"] = to_string(scenario);
  doc["duration"] = duration;
  doc["seed"] = seed;
  doc["output_dir"] = output_dir.string();
  doc["solver"] = {{"svd_cutoff", solver.svd_cutoff},
                   {"damping", solver.damping},
                   {"dt", solver.dt},
                   {"lambda_ref", solver.lambda_ref},
                   {"null_gain", solver.null_gain}};
  doc["admittance"] = {{"k_adm", admittance.k_adm},
                       {"f_desired", vec_json(admittance.f_desired)},
                       {"filter_cutoff_hz", admittance.filter_cutoff_hz}};
  doc["resolved_rate"] = {{"v_max", rate.v_max},           {"v_min", rate.v_min},
                          {"w_max", rate.w_max},           {"w_min", rate.w_min},
                          {"gamma_p", rate.gamma_p},       {"gamma_mu", rate.gamma_mu},
                          {"eps_p", rate.eps_p},           {"eps_mu", rate.eps_mu},
                          {"zero_tol_p", rate.zero_tol_p}, {"zero_tol_mu", rate.zero_tol_mu},
                          {"literal_threshold", rate.literal_threshold}};
  doc["trocar"] = {{"position", trocar.position ? vec_json(*trocar.position) : json(nullptr)},
                   {"stiffness", trocar.stiffness},
                   {"disturbance",
                    {{"amplitude", vec_json(trocar.disturbance.amplitude)},
                     {"frequency", trocar.disturbance.frequency},
                     {"phase", trocar.disturbance.phase}}},
                   {"noise_sigma", trocar.noise_sigma}};
  doc["teleop"] = {{"base_T_haptic", pose_to_json(teleop.base_T_haptic)},
                   {"motion_scale", teleop.motion_scale},
                   {"similarity",
                    teleop.similarity == SimilarityMode::full ? "full" : "rotation_only"}};
  doc["trajectory"] = {
      {"circle",
       {{"radius", circle.radius}, {"period", circle.period}, {"u", vec_json(circle.u)},
        {"v", vec_json(circle.v)}}},
      {"line",
       {{"length", line.length}, {"duration", line.duration}, {"direction", vec_json(line.direction)}}}};
  doc["initial"] = {{"q", initial_q ? vec_json(*initial_q) : json(nullptr)},
                    {"lambda", initial_lambda ? json(*initial_lambda) : json(nullptr)}};
  doc["log"] = {{"enabled", log_enabled}, {"decimation", log_decimation}};
  doc["server"] = {{"enabled", server.enabled},
                   {"host", server.host},
                   {"port", server.port},
                   {"state_rate_hz", server.state_rate_hz}};
  doc["compare"] = {{"amplitudes", sweep_amplitudes}};
  return doc;
}

void ExperimentConfig::validate() const {
  if (!(duration > 0.0) || !std::isfinite(duration)) {
    throw ConfigError("duration must be positive");
  }
  solver.validate();
  admittance.validate();
  rate.validate();
  teleop.validate();
  if (!(trocar.stiffness >= 0.0) || !(trocar.noise_sigma >= 0.0) ||
      !(trocar.disturbance.frequency >= 0.0)) {
    throw ConfigError("trocar: stiffness, noise_sigma and frequency must be non-negative");
  }
  if (ticks() == 0) {
    throw ConfigError("duration is shorter than one control period");
  }
  if (!(server.state_rate_hz > 0.0) || server.state_rate_hz > 1.0 / solver.dt + 1e-9) {
    throw ConfigError("server.state_rate_hz must be positive and at most the control rate");
  }
  if (initial_lambda && !(*initial_lambda >= kLambdaMin && *initial_lambda <= kLambdaMax)) {
    throw ConfigError("initial.lambda must lie in [0.05, 0.95]");
  }
  for (double a : sweep_amplitudes) {
    if (!(a >= 0.0) || !std::isfinite(a)) {
      throw ConfigError("compare.amplitudes must be non-negative");
    }
  }
  TrajectoryParams probe;
  probe.circle = circle;
  probe.line = line;
  try {
    probe.validate(TrajectoryKind::circle);
    probe.validate(TrajectoryKind::line);
  } catch (const InvalidInput& e) {
    throw ConfigError(e.what());
  }
}

std::uint64_t ExperimentConfig::ticks() const {
  const double n = std::llround(duration / solver.dt);
  return n > 0 ? static_cast<std::uint64_t>(n) : 0;
}

KinematicChain ExperimentConfig::make_chain() const {
  return chain_path ? KinematicChain::load(*chain_path) : KinematicChain::default_chain();
}

json MetricsSummary::to_json() const {
  return {{"mean_lateral_deviation", mean_lateral_deviation},
          {"max_lateral_deviation", max_lateral_deviation},
          {"rms_tracking_error", rms_tracking_error},
          {"max_tracking_error", max_tracking_error},
          {"rms_force_error", rms_force_error},
          {"mean_force_error", mean_force_error},
          {"lambda_terminal_error", lambda_terminal_error},
          {"tick_time_mean", tick_time_mean},
          {"tick_time_p95", tick_time_p95},
          {"tick_time_max", tick_time_max},
          {"max_constraint_residual", max_constraint_residual},
          {"rank_deficient_ticks", rank_deficient_ticks},
          {"ticks", ticks},
          {"joint_limit_events", joint_limit_events},
          {"lambda_clamp_events", lambda_clamp_events}};
}

Simulator make_simulator(const ExperimentConfig& cfg) {
  KinematicChain chain = cfg.make_chain();
  AugmentedState init;
  init.q = cfg.initial_q.value_or(chain.home());
  const KinematicSnapshot snap = evaluate(chain, init.q);
  const Vec3 p_ins = snap.instrument.position;

  TrocarModel trocar;
  trocar.stiffness = cfg.trocar.stiffness;
  trocar.disturbance = cfg.trocar.disturbance;
  trocar.noise_sigma = cfg.trocar.noise_sigma;
  if (cfg.trocar.position) {
    trocar.nominal = *cfg.trocar.position;
    if (cfg.initial_lambda) {
      init.lambda = *cfg.initial_lambda;
    } else {
      // Start with the RCM at the point of the shaft nearest the trocar.
      const Vec3 d = shaft_vector(snap.p_end, p_ins);
      const double s = (trocar.nominal - snap.p_end).dot(d) / d.squaredNorm();
      init.lambda = std::clamp(s, kLambdaMin, kLambdaMax);
    }
  } else {
    init.lambda = cfg.initial_lambda.value_or(cfg.solver.lambda_ref);
    trocar.nominal = rcm_position(snap.p_end, p_ins, init.lambda);
  }
  return Simulator(std::move(chain), trocar, cfg.solver, cfg.admittance, init, cfg.seed);
}

ControlLoop::ControlLoop(const ExperimentConfig& cfg)
    : cfg_(cfg),
      sim_(make_simulator(cfg)),
      mapper_(cfg.teleop, sim_.state().kin.instrument) {
  trajectory_.start = sim_.state().kin.instrument;
  trajectory_.circle = cfg_.circle;
  trajectory_.line = cfg_.line;
  last_.desired = trajectory_.start;
  tick_times_.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(cfg_.ticks(), 1u << 22)));
}

Pose ControlLoop::reference(double t) {
  if (cfg_.mode == Mode::teleop) {
    if (pending_) {
      mapper_.apply(*pending_, sim_.state().kin.instrument);
      const KinematicChain& chain = sim_.chain();
      const JointLimits& lim = chain.joint(chain.gripper_index()).limits;
      sim_.set_gripper(gripper_to_joint(mapper_.gripper(), lim.lower, lim.upper));
    }
    return mapper_.desired();
  }
  switch (cfg_.scenario) {
    case Scenario::circle: return scripted_trajectory(TrajectoryKind::circle, trajectory_, t);
    case Scenario::line: return scripted_trajectory(TrajectoryKind::line, trajectory_, t);
    default: return trajectory_.start;
  }
}

const TickReport& ControlLoop::tick() {
  const auto start = std::chrono::steady_clock::now();
  try {
    const double t_next = static_cast<double>(ticks_ + 1) * cfg_.solver.dt;
    TickReport rep;
    rep.desired = reference(t_next);

    const SimState& s = sim_.state();
    const Pose& current = s.kin.instrument;
    const Vec3 e_p = position_error(rep.desired.position, current.position);
    const Vec3 e_mu = orientation_error(rep.desired.rotation, current.rotation);
    rep.xi_ins = desired_twist(e_p, e_mu, cfg_.rate);

    const Vec3 d_ins = shaft_vector(s.kin.p_end, current.position);
    const Mat3 omega = projector(shaft_direction(d_ins));
    rep.p_rcm_dot =
        admittance_velocity(cfg_.admittance, omega, force_error(s.f_hat, cfg_.admittance.f_desired));

    const RcmContext ctx = build_rcm_context(s.kin, s.aug.lambda, rep.xi_ins, rep.p_rcm_dot);
    rep.xi_aug = ctx.xi_aug;
    const AugVector eta = null_space_gradient(s.aug.lambda, cfg_.solver);
    rep.resolution = resolve_detailed(ctx.j_total, ctx.xi_aug, eta, cfg_.solver);
    if (rep.resolution.rank < kConstraintDim) {
      ++rank_deficient_;
    } else {
      max_residual_ = std::max(max_residual_, rep.resolution.residual);
    }

    sim_.step(rep.resolution.qdot_aug, rep.desired);
    ++ticks_;
    rep.compute_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    tick_times_.push_back(rep.compute_seconds);
    last_ = rep;
  } catch (const RuntimeFault&) {
    throw;
  } catch (const Error& e) {
    throw RuntimeFault(std::string("control tick ") + std::to_string(ticks_ + 1) + ": " + e.what());
  }
  return last_;
}

MetricsSummary ControlLoop::summary() const {
  const SimState& s = sim_.state();
  const RunningMetrics& m = s.metrics;
  MetricsSummary out;
  out.mean_lateral_deviation = m.mean_lateral();
  out.max_lateral_deviation = m.max_lateral;
  out.rms_tracking_error = m.rms_tracking();
  out.max_tracking_error = m.max_tracking;
  out.rms_force_error = m.rms_force_error();
  out.mean_force_error = m.mean_force_error();
  out.lambda_terminal_error = std::abs(s.aug.lambda - cfg_.solver.lambda_ref);
  if (!tick_times_.empty()) {
    double sum = 0.0;
    for (double v : tick_times_) {
      sum += v;
    }
    out.tick_time_mean = sum / static_cast<double>(tick_times_.size());
    out.tick_time_p95 = percentile(tick_times_, 0.95);
    out.tick_time_max = *std::max_element(tick_times_.begin(), tick_times_.end());
  }
  out.max_constraint_residual = max_residual_;
  out.rank_deficient_ticks = rank_deficient_;
  out.ticks = ticks_;
  out.joint_limit_events = m.joint_limit_events;
  out.lambda_clamp_events = m.lambda_clamp_events;
  return out;
}

RunOutput run(const ExperimentConfig& cfg, bool write_files) {
  cfg.validate();
  ControlLoop loop(cfg);
  RunOutput out;

  std::ofstream log;
  if (write_files) {
    std::error_code ec;
    fs::create_directories(cfg.output_dir, ec);
    if (ec) {
      throw RuntimeFault("cannot create output directory " + cfg.output_dir.string() + ": " +
                         ec.message());
    }
    write_json_file(cfg.output_dir / "config.json", cfg.to_json());
    if (cfg.log_enabled) {
      out.log_path = cfg.output_dir / "log.csv";
      log.open(out.log_path, std::ios::binary);
      if (!log) {
        throw RuntimeFault("cannot write " + out.log_path.string());
      }
      log << csv_header() << '\n';
      std::uint64_t row = 0;
      const auto every = static_cast<std::uint64_t>(cfg.log_decimation);
      loop.sim().set_log_sink([&log, &row, every](const LogRecord& rec) {
        if (row++ % every == 0) {
          log << csv_row(rec) << '\n';
        }
      });
    }
  }

  const std::uint64_t n = cfg.ticks();
  for (std::uint64_t i = 0; i < n; ++i) {
    loop.tick();
  }
  loop.sim().set_log_sink(nullptr);
  out.summary = loop.summary();

  if (write_files) {
    log.close();
    json summary = out.summary.to_json();
    summary["scenario"] = to_string(cfg.scenario);
    summary["seed"] = cfg.seed;
    write_json_file(cfg.output_dir / "summary.json", summary);
  }
  return out;
}

std::vector<ComparePair> compare(const ExperimentConfig& cfg, bool write_files) {
  cfg.validate();
  std::vector<double> amplitudes;
  Vec3 direction = Vec3::UnitX();
  const double configured = cfg.trocar.disturbance.amplitude.norm();
  if (cfg.scenario == Scenario::disturbance_sweep) {
    amplitudes = cfg.sweep_amplitudes;
    if (configured > 0.0) {
      direction = cfg.trocar.disturbance.amplitude / configured;
    }
  } else {
    amplitudes.push_back(configured);
  }

  std::vector<ComparePair> pairs;
  for (double amp : amplitudes) {
    ExperimentConfig on = cfg;
    if (cfg.scenario == Scenario::disturbance_sweep) {
      on.trocar.disturbance.amplitude = amp * direction;
    }
    ExperimentConfig off = on;
    off.admittance.k_adm = 0.0;

    ComparePair pair;
    pair.amplitude = amp;
    pair.with_admittance = run(on, false).summary;
    pair.without_admittance = run(off, false).summary;
    auto ratio = [](double num, double den) {
      return den > 0.0 ? num / den : std::numeric_limits<double>::infinity();
    };
    pair.lateral_ratio = ratio(pair.without_admittance.mean_lateral_deviation,
                               pair.with_admittance.mean_lateral_deviation);
    pair.force_ratio =
        ratio(pair.without_admittance.mean_force_error, pair.with_admittance.mean_force_error);
    pairs.push_back(pair);
  }

  if (write_files) {
    std::error_code ec;
    fs::create_directories(cfg.output_dir, ec);
    if (ec) {
      throw RuntimeFault("cannot create output directory " + cfg.output_dir.string());
    }
    write_json_file(cfg.output_dir / "config.json", cfg.to_json());
    write_json_file(cfg.output_dir / "compare.json", compare_to_json(pairs));
  }
  return pairs;
}

json compare_to_json(const std::vector<ComparePair>& pairs) {
  json out = json::array();
  for (const ComparePair& p : pairs) {
    auto finite_or_null = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
    out.push_back({{"amplitude", p.amplitude},
                   {"with_admittance", p.with_admittance.to_json()},
                   {"without_admittance", p.without_admittance.to_json()},
                   {"lateral_ratio", finite_or_null(p.lateral_ratio)},
                   {"force_ratio", finite_or_null(p.force_ratio)}});
  }
  return {{"pairs", out}};
}

}  // namespace rcmteleop
