#pragma once

#include <string>
#include <vector>

#include "drivelab/json_io.hpp"
#include "drivelab/model.hpp"
#include "drivelab/validate.hpp"

namespace drivelab {

struct AggregatedSkeleton {
  std::vector<std::string> member_ids;  // participant ids, sorted
  std::vector<std::string> joint_names;
  Millis t_start = 0;
  Millis t_end = 0;
  double rate_hz = 0.0;
  std::vector<SkeletonFrame> frames;
  std::vector<std::vector<double>> dispersion;  // [frame][joint], population std-dev in metres
};

/// Sign-aligned normalised sum: each quaternion is flipped to a non-negative
/// dot product with the first before summing.
Quat mean_rotation(const std::vector<Quat>& qs);

/// Resamples every member on the grid t_start + round(k * 1000 / rate_hz)
/// up to t_end and averages per frame and joint. Members are ordered by
/// participant id; sessions whose skeleton does not cover the window are left
/// out with a warning. Throws std::invalid_argument for a bad window or rate,
/// no covering member, or differing joint sets.
AggregatedSkeleton aggregate_avatars(const std::vector<const SessionRecording*>& sessions, Millis t_start,
                                     Millis t_end, double rate_hz, Report* report = nullptr);

void to_json(Json& j, const AggregatedSkeleton& a);

}  // namespace drivelab
