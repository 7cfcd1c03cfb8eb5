#pragma once

#include <vector>

#include "drivelab/geo/geodesy.hpp"
#include "drivelab/model.hpp"
#include "drivelab/validate.hpp"

namespace drivelab {

struct PathPoint {
  Millis t = 0;
  Vec3 position;
  double heading = 0.0;  // compass degrees
  double speed = 0.0;    // m/s
};

struct EgoPath {
  std::vector<PathPoint> points;
  std::vector<double> arc_length;  // cumulative metres, one per point

  bool empty() const { return points.empty(); }
  double length() const { return arc_length.empty() ? 0.0 : arc_length.back(); }
  Millis t_first() const { return points.front().t; }
  Millis t_last() const { return points.back().t; }
  /// Arc length at time t (clamped), linear between points.
  double arc_length_at(Millis t) const;
};

/// Throws std::invalid_argument for fewer than two samples. Duplicate
/// timestamps keep the first sample; each drop is reported as a warning.
EgoPath build_ego_path(const std::vector<GeoSample>& samples, const LocalFrame& frame,
                       Report* report = nullptr);

struct EgoPose {
  Vec3 position;
  double heading = 0.0;
  bool clamped = false;  // t was outside the path time range
};

EgoPose interpolate_pose(const EgoPath& path, Millis t);

/// Vehicle frame (x forward, y left, z up, origin at the path point) to the
/// scene frame, for a pose with compass heading h: forward = (sin h, cos h, 0).
Vec3 vehicle_to_world(const EgoPose& pose, const Vec3& p);
Vec3 vehicle_dir_to_world(const EgoPose& pose, const Vec3& d);
Vec3 world_to_vehicle(const EgoPose& pose, const Vec3& p);

}  // namespace drivelab
