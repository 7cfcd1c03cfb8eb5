#pragma once

#include <optional>
#include <string>
#include <vector>

#include "drivelab/json_io.hpp"
#include "drivelab/model.hpp"

namespace drivelab {

struct TrajectoryPoint {
  Millis t = 0;
  Vec3 position;
  friend bool operator==(const TrajectoryPoint&, const TrajectoryPoint&) = default;
};

struct Trajectory {
  std::string participant_id;
  std::string joint;
  Millis t_start = 0;
  Millis t_end = 0;
  std::vector<TrajectoryPoint> points;
  std::optional<std::vector<TrajectoryPoint>> simplified;
  std::optional<double> epsilon;
};

/// Joints offered by default for trajectories.
const std::vector<std::string>& trajectory_joints();

/// One point per skeleton frame with t_start <= t <= t_end. Throws
/// std::invalid_argument when the session has no such joint.
Trajectory extract_trajectory(const SessionRecording& session, const std::string& joint, Millis t_start,
                              Millis t_end);

/// Indices kept by Ramer-Douglas-Peucker with tolerance epsilon; both
/// endpoints are always kept and epsilon 0 keeps every point.
std::vector<std::size_t> rdp_indices(const std::vector<Vec3>& points, double epsilon);

/// Fills `simplified`. Throws std::invalid_argument for a negative epsilon.
Trajectory simplify_trajectory(Trajectory traj, double epsilon);

/// Largest distance from any point to the polyline through `simplified`.
double max_deviation(const std::vector<TrajectoryPoint>& points, const std::vector<TrajectoryPoint>& simplified);

void to_json(Json& j, const TrajectoryPoint& p);
void to_json(Json& j, const Trajectory& t);

}  // namespace drivelab
