#include "rcmteleop/teleop_mapping.hpp"

#include <algorithm>
#include <cmath>

#include "rcmteleop/errors.hpp"

namespace rcmteleop {

namespace {

void require_pose(const Pose& pose, const char* what) {
  if (!is_valid_pose(pose, 1e-6)) {
    throw InvalidInput(std::string(what) + ": invalid pose");
  }
}

void require_engaged(const ClutchState& clutch, const char* what) {
  if (!clutch.engaged) {
    throw NotEngaged(std::string(what) + ": clutch is not engaged");
  }
}

}  // namespace

void FrameRegistry::validate() const {
  if (!is_valid_pose(base_T_haptic, 1e-6)) {
    throw ConfigError("teleop.base_T_haptic is not a valid pose");
  }
  if (!(motion_scale > 0.0) || !std::isfinite(motion_scale)) {
    throw ConfigError("teleop.motion_scale must be finite and positive");
  }
}

ClutchState engage(const Pose& stylus_pose, const Pose& instrument_pose, const FrameRegistry& reg) {
  require_pose(stylus_pose, "engage stylus");
  require_pose(instrument_pose, "engage instrument");
  reg.validate();
  ClutchState clutch;
  clutch.engaged = true;
  clutch.stylus_anchor = stylus_pose;
  clutch.instrument_anchor = instrument_pose;
  clutch.registration = instrument_pose.inverse() * reg.base_T_haptic * stylus_pose;
  clutch.motion_scale = reg.motion_scale;
  clutch.similarity = reg.similarity;
  return clutch;
}

Pose relative_stylus_motion(const ClutchState& clutch, const Pose& stylus_current) {
  require_engaged(clutch, "relative_stylus_motion");
  require_pose(stylus_current, "relative_stylus_motion");
  return normalized(clutch.stylus_anchor.inverse() * stylus_current);
}

Pose map_to_instrument_frame(const ClutchState& clutch, const Pose& rel) {
  require_engaged(clutch, "map_to_instrument_frame");
  Pose conj = clutch.registration;
  if (clutch.similarity == SimilarityMode::rotation_only) {
    conj.position.setZero();
  }
  Pose out = conj * rel * conj.inverse();
  out.position *= clutch.motion_scale;
  return normalized(out);
}

Pose desired_pose(const ClutchState& clutch, const Pose& mapped) {
  require_engaged(clutch, "desired_pose");
  return normalized(clutch.instrument_anchor * mapped);
}

ClutchState disengage(const ClutchState& clutch) {
  ClutchState out = clutch;
  out.engaged = false;
  out.stylus_anchor = Pose::identity();
  out.instrument_anchor = Pose::identity();
  out.registration = Pose::identity();
  return out;
}

TeleopMapper::TeleopMapper(FrameRegistry reg, const Pose& initial_instrument_pose)
    : reg_(std::move(reg)), desired_(initial_instrument_pose) {
  reg_.validate();
}

void TeleopMapper::apply(const TeleopCommand& cmd, const Pose& current_instrument_pose) {
  gripper_ = std::clamp(cmd.gripper, 0.0, 1.0);
  if (!cmd.clutch) {
    if (clutch_.engaged) {
      clutch_ = disengage(clutch_);
    }
    return;
  }
  if (!clutch_.engaged) {
    clutch_ = engage(cmd.stylus, current_instrument_pose, reg_);
    desired_ = current_instrument_pose;
    return;
  }
  const Pose rel = relative_stylus_motion(clutch_, cmd.stylus);
  desired_ = desired_pose(clutch_, map_to_instrument_frame(clutch_, rel));
}

double gripper_to_joint(double command, double lower, double upper) {
  return lower + std::clamp(command, 0.0, 1.0) * (upper - lower);
}

}  // namespace rcmteleop
