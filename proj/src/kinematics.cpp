#include "rcmteleop/kinematics.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "rcmteleop/errors.hpp"

namespace rcmteleop {

// Generated from config/default_chain.json at configure time.
extern const char* const kDefaultChainJson;

namespace {

Vec3 read_vec3(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) {
    return Vec3::Zero();
  }
  const auto& arr = j.at(key);
  if (!arr.is_array() || arr.size() != 3) {
    throw ConfigError(std::string("chain: '") + key + "' must be a 3-element array");
  }
  Vec3 v(arr[0].get<double>(), arr[1].get<double>(), arr[2].get<double>());
  if (!v.allFinite()) {
    throw ConfigError(std::string("chain: '") + key + "' has non-finite entries");
  }
  return v;
}

JointDescriptor parse_joint(const nlohmann::json& j, int index) {
  JointDescriptor joint;
  joint.name = j.value("name", "joint_" + std::to_string(index));

  const std::string kind = j.value("kind", "revolute");
  if (kind == "revolute") {
    joint.kind = JointKind::revolute;
  } else if (kind == "prismatic") {
    joint.kind = JointKind::prismatic;
  } else {
    throw ConfigError("chain: joint " + std::to_string(index) + " has unknown kind '" + kind + "'");
  }

  const Vec3 axis = read_vec3(j, "axis");
  if (std::abs(axis.norm() - 1.0) > 1e-6) {
    throw ConfigError("chain: joint " + std::to_string(index) + " axis is not a unit vector");
  }
  joint.axis = axis.normalized();
  joint.fixed_transform.position = read_vec3(j, "translation");
  joint.fixed_transform.rotation = rotation_from_vector(read_vec3(j, "rotation"));

  if (j.contains("limits")) {
    const auto& lim = j.at("limits");
    if (!lim.is_array() || lim.size() != 2) {
      throw ConfigError("chain: joint " + std::to_string(index) + " limits must be [lower, upper]");
    }
    joint.limits = {lim[0].get<double>(), lim[1].get<double>()};
    if (!(joint.limits.lower <= joint.limits.upper)) {
      throw ConfigError("chain: joint " + std::to_string(index) + " has lower limit above upper");
    }
  }
  return joint;
}

void check_frame_index(int frame_index) {
  if (frame_index < 1 || frame_index > kNumJoints) {
    throw InvalidInput("frame index " + std::to_string(frame_index) + " outside 1.." +
                       std::to_string(kNumJoints));
  }
}

Pose joint_motion(const JointDescriptor& joint, double value) {
  if (joint.kind == JointKind::revolute) {
    return {Eigen::AngleAxisd(value, joint.axis).toRotationMatrix(), Vec3::Zero()};
  }
  return {Mat3::Identity(), joint.axis * value};
}

}  // namespace

KinematicChain::KinematicChain(std::vector<JointDescriptor> joints, int end_effector_index,
                               int instrument_index, int gripper_index, const JointVector& home)
    : joints_(std::move(joints)),
      end_effector_index_(end_effector_index),
      instrument_index_(instrument_index),
      gripper_index_(gripper_index),
      home_(home) {
  if (joints_.size() != static_cast<std::size_t>(kNumJoints)) {
    throw ConfigError("chain: expected " + std::to_string(kNumJoints) + " joints, got " +
                      std::to_string(joints_.size()));
  }
  auto in_range = [](int idx) { return idx >= 1 && idx <= kNumJoints; };
  if (!in_range(end_effector_index_) || !in_range(instrument_index_) || !in_range(gripper_index_)) {
    throw ConfigError("chain: frame indices must lie in 1..11");
  }
  if (end_effector_index_ >= instrument_index_) {
    throw ConfigError("chain: end_effector_index must precede instrument_index");
  }
  for (const auto& joint : joints_) {
    if (!is_rotation(joint.fixed_transform.rotation) || !joint.fixed_transform.position.allFinite()) {
      throw ConfigError("chain: joint '" + joint.name + "' has an invalid fixed transform");
    }
  }
  if (!home_.allFinite()) {
    throw ConfigError("chain: home configuration is not finite");
  }
}

KinematicChain KinematicChain::from_json(const nlohmann::json& doc) {
  try {
    const auto& arr = doc.at("joints");
    if (!arr.is_array()) {
      throw ConfigError("chain: 'joints' must be an array");
    }
    std::vector<JointDescriptor> joints;
    int index = 1;
    for (const auto& j : arr) {
      joints.push_back(parse_joint(j, index++));
    }
    JointVector home = JointVector::Zero();
    if (doc.contains("home")) {
      const auto values = doc.at("home").get<std::vector<double>>();
      if (values.size() != static_cast<std::size_t>(kNumJoints)) {
        throw ConfigError("chain: 'home' must list 11 joint values");
      }
      home = Eigen::Map<const JointVector>(values.data());
    }
    return KinematicChain(std::move(joints), doc.value("end_effector_index", 7),
                          doc.value("instrument_index", 11), doc.value("gripper_index", 11), home);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("chain: ") + e.what());
  }
}

KinematicChain KinematicChain::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("chain: cannot open " + path.string());
  }
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("chain: " + path.string() + ": " + e.what());
  }
  return from_json(doc);
}

KinematicChain KinematicChain::default_chain() {
  static const KinematicChain chain = from_json(nlohmann::json::parse(kDefaultChainJson));
  return chain;
}

JointVector KinematicChain::lower_limits() const {
  JointVector out;
  for (int i = 0; i < kNumJoints; ++i) {
    out[i] = joints_[i].limits.lower;
  }
  return out;
}

JointVector KinematicChain::upper_limits() const {
  JointVector out;
  for (int i = 0; i < kNumJoints; ++i) {
    out[i] = joints_[i].limits.upper;
  }
  return out;
}

nlohmann::json KinematicChain::to_json() const {
  nlohmann::json doc;
  doc["end_effector_index"] = end_effector_index_;
  doc["instrument_index"] = instrument_index_;
  doc["gripper_index"] = gripper_index_;
  doc["home"] = std::vector<double>(home_.data(), home_.data() + kNumJoints);
  auto& arr = doc["joints"] = nlohmann::json::array();
  for (const auto& joint : joints_) {
    const Eigen::AngleAxisd aa(joint.fixed_transform.rotation);
    const Vec3 rv = aa.axis() * aa.angle();
    const Vec3& t = joint.fixed_transform.position;
    arr.push_back({{"name", joint.name},
                   {"kind", joint.kind == JointKind::revolute ? "revolute" : "prismatic"},
                   {"axis", {joint.axis.x(), joint.axis.y(), joint.axis.z()}},
                   {"translation", {t.x(), t.y(), t.z()}},
                   {"rotation", {rv.x(), rv.y(), rv.z()}},
                   {"limits", {joint.limits.lower, joint.limits.upper}}});
  }
  return doc;
}

FramePoses forward_kinematics(const KinematicChain& chain, const JointVector& q) {
  if (!q.allFinite()) {
    throw InvalidInput("forward_kinematics: joint vector has non-finite entries");
  }
  FramePoses frames;
  Pose current;
  for (int k = 1; k <= kNumJoints; ++k) {
    const JointDescriptor& joint = chain.joint(k);
    current = current * joint.fixed_transform;
    if (chain.moves_frames(k)) {
      current = current * joint_motion(joint, q[k - 1]);
    }
    frames[k - 1] = current;
  }
  return frames;
}

FramePoses forward_kinematics(const KinematicChain& chain, std::span<const double> q) {
  return forward_kinematics(chain, to_joint_vector(q));
}

Pose instrument_pose(const KinematicChain& chain, const JointVector& q) {
  return forward_kinematics(chain, q)[chain.instrument_index() - 1];
}

Vec3 end_effector_position(const KinematicChain& chain, const JointVector& q) {
  return forward_kinematics(chain, q)[chain.end_effector_index() - 1].position;
}

Jacobian6 geometric_jacobian(const KinematicChain& chain, const FramePoses& frames, int frame_index) {
  check_frame_index(frame_index);
  Jacobian6 jac = Jacobian6::Zero();
  const Vec3& target = frames[frame_index - 1].position;
  for (int k = 1; k <= frame_index; ++k) {
    if (!chain.moves_frames(k)) {
      continue;
    }
    const Pose& frame = frames[k - 1];
    const Vec3 axis = frame.rotation * chain.joint(k).axis;
    if (chain.joint(k).kind == JointKind::revolute) {
      jac.block<3, 1>(0, k - 1) = axis.cross(target - frame.position);
      jac.block<3, 1>(3, k - 1) = axis;
    } else {
      jac.block<3, 1>(0, k - 1) = axis;
    }
  }
  return jac;
}

Jacobian6 geometric_jacobian(const KinematicChain& chain, const JointVector& q, int frame_index) {
  check_frame_index(frame_index);
  return geometric_jacobian(chain, forward_kinematics(chain, q), frame_index);
}

Jacobian3 position_jacobian_end(const KinematicChain& chain, const JointVector& q) {
  return geometric_jacobian(chain, q, chain.end_effector_index()).topRows<3>();
}

Jacobian6 full_jacobian_ins(const KinematicChain& chain, const JointVector& q) {
  return geometric_jacobian(chain, q, chain.instrument_index());
}

KinematicSnapshot evaluate(const KinematicChain& chain, const JointVector& q) {
  KinematicSnapshot snap;
  snap.frames = forward_kinematics(chain, q);
  snap.p_end = snap.frames[chain.end_effector_index() - 1].position;
  snap.instrument = snap.frames[chain.instrument_index() - 1];
  snap.j_end = geometric_jacobian(chain, snap.frames, chain.end_effector_index()).topRows<3>();
  snap.j_ins = geometric_jacobian(chain, snap.frames, chain.instrument_index());
  return snap;
}

JointVector to_joint_vector(std::span<const double> values) {
  if (values.size() != static_cast<std::size_t>(kNumJoints)) {
    throw InvalidInput("expected " + std::to_string(kNumJoints) + " joint values, got " +
                       std::to_string(values.size()));
  }
  JointVector q = Eigen::Map<const JointVector>(values.data());
  if (!q.allFinite()) {
    throw InvalidInput("joint vector has non-finite entries");
  }
  return q;
}

}  // namespace rcmteleop
