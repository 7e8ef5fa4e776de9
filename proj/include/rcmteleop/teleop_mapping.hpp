#pragma once

#include <optional>

#include "rcmteleop/types.hpp"

namespace rcmteleop {

/// How the stylus relative motion is carried into the instrument anchor frame.
enum class SimilarityMode {
  /// Conjugate by the rotation of the registration only: stylus rotations
  /// become instrument rotations about the instrument point.
  rotation_only,
  /// Conjugate by the full homogeneous registration.
  full,
};

struct FrameRegistry {
  /// Haptic device base frame expressed in the robot base frame.
  Pose base_T_haptic;
  /// Scales the translational part of the mapped motion.
  double motion_scale = 1.0;
  SimilarityMode similarity = SimilarityMode::rotation_only;

  void validate() const;
};

/// Anchors captured when the operator presses the command button.
struct ClutchState {
  bool engaged = false;
  Pose stylus_anchor;      // stylus anchor in the haptic frame
  Pose instrument_anchor;  // instrument anchor in the robot base frame
  Pose registration;       // stylus anchor in the instrument anchor frame
  double motion_scale = 1.0;
  SimilarityMode similarity = SimilarityMode::rotation_only;
};

ClutchState engage(const Pose& stylus_pose, const Pose& instrument_pose, const FrameRegistry& reg);

/// Stylus motion from anchor to current, expressed in the anchor frame.
Pose relative_stylus_motion(const ClutchState& clutch, const Pose& stylus_current);

/// Similarity transform of the relative motion into the instrument anchor frame.
Pose map_to_instrument_frame(const ClutchState& clutch, const Pose& rel);

/// Desired instrument pose in the robot base frame.
Pose desired_pose(const ClutchState& clutch, const Pose& mapped);

ClutchState disengage(const ClutchState& clutch);

/// One leader-device sample.
struct TeleopCommand {
  Pose stylus;
  bool clutch = false;
  double gripper = 0.0;  // [0, 1]
  double timestamp = 0.0;
};

/// Clutch bookkeeping for the control loop: re-anchors on engage and holds the
/// last desired pose while released.
class TeleopMapper {
 public:
  TeleopMapper(FrameRegistry reg, const Pose& initial_instrument_pose);

  /// Consumes a command. On the engage edge the current instrument pose is
  /// taken as the anchor, so the desired pose starts equal to it.
  void apply(const TeleopCommand& cmd, const Pose& current_instrument_pose);

  const Pose& desired() const { return desired_; }
  const ClutchState& clutch() const { return clutch_; }
  double gripper() const { return gripper_; }

 private:
  FrameRegistry reg_;
  ClutchState clutch_;
  Pose desired_;
  double gripper_ = 0.0;
};

/// Maps a [0, 1] gripper command linearly onto joint limits.
double gripper_to_joint(double command, double lower, double upper);

}  // namespace rcmteleop
