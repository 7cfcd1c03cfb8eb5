#include "drivelab/analytics/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace drivelab {

const std::vector<std::string>& trajectory_joints() {
  static const std::vector<std::string> joints{"head", "left_hand", "right_hand"};
  return joints;
}

Trajectory extract_trajectory(const SessionRecording& session, const std::string& joint, Millis t_start,
                              Millis t_end) {
  const auto idx = session.joint_index(joint);
  if (!idx) throw std::invalid_argument("unknown joint '" + joint + "'");
  Trajectory t;
  t.participant_id = session.participant_id;
  t.joint = joint;
  t.t_start = t_start;
  t.t_end = t_end;
  for (const auto& f : session.skeleton) {
    if (f.t < t_start || f.t > t_end || *idx >= f.joints.size()) continue;
    t.points.push_back({f.t, f.joints[*idx].position});
  }
  return t;
}

std::vector<std::size_t> rdp_indices(const std::vector<Vec3>& points, double epsilon) {
  const std::size_t n = points.size();
  std::vector<std::size_t> all(n);
  for (std::size_t i = 0; i < n; ++i) all[i] = i;
  if (n <= 2 || epsilon == 0.0) return all;

  std::vector<bool> keep(n, false);
  keep.front() = keep.back() = true;
  std::vector<std::pair<std::size_t, std::size_t>> stack{{0, n - 1}};
  while (!stack.empty()) {
    const auto [lo, hi] = stack.back();
    stack.pop_back();
    double worst = -1.0;
    std::size_t at = lo;
    for (std::size_t i = lo + 1; i < hi; ++i) {
      const double d = point_segment_distance(points[i], points[lo], points[hi]);
      if (d > worst) {
        worst = d;
        at = i;
      }
    }
    if (worst > epsilon) {
      keep[at] = true;
      stack.emplace_back(at, hi);
      stack.emplace_back(lo, at);
    }
  }
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < n; ++i) {
    if (keep[i]) out.push_back(i);
  }
  return out;
}

Trajectory simplify_trajectory(Trajectory traj, double epsilon) {
  if (!(epsilon >= 0.0)) throw std::invalid_argument("epsilon must be non-negative");
  std::vector<Vec3> pos;
  pos.reserve(traj.points.size());
  for (const auto& p : traj.points) pos.push_back(p.position);
  std::vector<TrajectoryPoint> kept;
  for (std::size_t i : rdp_indices(pos, epsilon)) kept.push_back(traj.points[i]);
  traj.simplified = std::move(kept);
  traj.epsilon = epsilon;
  return traj;
}

double max_deviation(const std::vector<TrajectoryPoint>& points, const std::vector<TrajectoryPoint>& simplified) {
  double worst = 0.0;
  for (const auto& p : points) {
    double best = simplified.empty() ? 0.0 : distance(p.position, simplified.front().position);
    for (std::size_t i = 0; i + 1 < simplified.size(); ++i) {
      best = std::min(best, point_segment_distance(p.position, simplified[i].position, simplified[i + 1].position));
    }
    worst = std::max(worst, best);
  }
  return worst;
}

void to_json(Json& j, const TrajectoryPoint& p) { j = {{"t", p.t}, {"position", p.position}}; }

void to_json(Json& j, const Trajectory& t) {
  j = {{"participant_id", t.participant_id},
       {"joint", t.joint},
       {"t_start", t.t_start},
       {"t_end", t.t_end},
       {"points", t.points}};
  if (t.simplified) j["simplified"] = *t.simplified;
  if (t.epsilon) j["epsilon"] = *t.epsilon;
}

}  // namespace drivelab
