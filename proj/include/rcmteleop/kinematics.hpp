#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "rcmteleop/types.hpp"

namespace rcmteleop {

enum class JointKind { revolute, prismatic };

struct JointLimits {
  double lower = -1e9;
  double upper = 1e9;
};

/// One joint: a fixed transform from the parent frame followed by motion about
/// (revolute) or along (prismatic) a unit axis expressed in the joint frame.
struct JointDescriptor {
  std::string name;
  JointKind kind = JointKind::revolute;
  Pose fixed_transform;
  Vec3 axis = Vec3::UnitZ();
  JointLimits limits;
};

/// Arm + instrument chain. Frame k (1-based) is the frame of joint k; frame 0 is
/// the robot base. The gripper joint opens the jaws symmetrically about the tool
/// frame, so its motion does not move any frame and its Jacobian column is zero.
class KinematicChain {
 public:
  KinematicChain(std::vector<JointDescriptor> joints, int end_effector_index,
                 int instrument_index, int gripper_index, const JointVector& home);

  static KinematicChain from_json(const nlohmann::json& doc);
  static KinematicChain load(const std::filesystem::path& path);
  /// The shipped 7-DoF arm + wristed instrument description.
  static KinematicChain default_chain();

  const std::vector<JointDescriptor>& joints() const { return joints_; }
  const JointDescriptor& joint(int index) const { return joints_.at(index - 1); }
  int end_effector_index() const { return end_effector_index_; }
  int instrument_index() const { return instrument_index_; }
  int gripper_index() const { return gripper_index_; }
  const JointVector& home() const { return home_; }

  /// False for the gripper joint.
  bool moves_frames(int index) const { return index != gripper_index_; }

  JointVector lower_limits() const;
  JointVector upper_limits() const;

  nlohmann::json to_json() const;

 private:
  std::vector<JointDescriptor> joints_;
  int end_effector_index_;
  int instrument_index_;
  int gripper_index_;
  JointVector home_;
};

/// Poses of frames 1..11 in base coordinates (element k-1 is frame k).
using FramePoses = std::array<Pose, kNumJoints>;

FramePoses forward_kinematics(const KinematicChain& chain, const JointVector& q);
FramePoses forward_kinematics(const KinematicChain& chain, std::span<const double> q);

Pose instrument_pose(const KinematicChain& chain, const JointVector& q);
Vec3 end_effector_position(const KinematicChain& chain, const JointVector& q);

/// Columns: [o_k x (p_target - p_k); o_k] for revolute, [o_k; 0] for prismatic,
/// zero for joints distal to frame_index and for the gripper.
Jacobian6 geometric_jacobian(const KinematicChain& chain, const JointVector& q, int frame_index);
Jacobian6 geometric_jacobian(const KinematicChain& chain, const FramePoses& frames,
                             int frame_index);

Jacobian3 position_jacobian_end(const KinematicChain& chain, const JointVector& q);
Jacobian6 full_jacobian_ins(const KinematicChain& chain, const JointVector& q);

/// Everything one control tick needs from the chain, from a single FK pass.
struct KinematicSnapshot {
  FramePoses frames;
  Vec3 p_end;
  Pose instrument;
  Jacobian3 j_end;
  Jacobian6 j_ins;
};

KinematicSnapshot evaluate(const KinematicChain& chain, const JointVector& q);

/// Converts an untyped joint array, rejecting wrong sizes and non-finite entries.
JointVector to_joint_vector(std::span<const double> values);

}  // namespace rcmteleop
