#pragma once

#include <optional>

#include "drivelab/model.hpp"

namespace drivelab {

/// Pose of every joint at t: positions lerped, rotations slerped between the
/// bracketing frames, an exact copy on a frame time. Outside the recorded
/// span the nearest frame is held; nullopt without frames.
std::optional<SkeletonFrame> sample_skeleton(const SessionRecording& session, Millis t);

/// True when the skeleton has frames at or before `t0` and at or after `t1`.
bool skeleton_covers(const SessionRecording& session, Millis t0, Millis t1);

}  // namespace drivelab
