#include "drivelab/geo/ego_path.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace drivelab {

EgoPath build_ego_path(const std::vector<GeoSample>& samples, const LocalFrame& frame,
                       Report* report) {
  std::vector<GeoSample> sorted = samples;
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const GeoSample& a, const GeoSample& b) { return a.t < b.t; });
  std::vector<GeoSample> kept;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (!kept.empty() && kept.back().t == sorted[i].t) {
      if (report) {
        report->warning("ego_path[" + std::to_string(i) + "]",
                        "duplicate timestamp " + std::to_string(sorted[i].t) + " dropped");
      }
      continue;
    }
    kept.push_back(sorted[i]);
  }
  if (kept.size() < 2) throw std::invalid_argument("ego path needs at least two distinct samples");

  EgoPath path;
  path.points.reserve(kept.size());
  for (const auto& g : kept) path.points.push_back({g.t, geo_to_local(frame, g), 0.0, 0.0});

  const std::size_t n = kept.size();
  path.arc_length.assign(n, 0.0);
  for (std::size_t i = 1; i < n; ++i) {
    path.arc_length[i] =
        path.arc_length[i - 1] + distance(path.points[i - 1].position, path.points[i].position);
  }

  double last_heading = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    // Forward segment, or the incoming one at the final point.
    const std::size_t a = i + 1 < n ? i : i - 1;
    const Vec3 seg = path.points[a + 1].position - path.points[a].position;
    const double seg_len = norm(Vec3{seg.x, seg.y, 0.0});
    const double dt = static_cast<double>(path.points[a + 1].t - path.points[a].t) / 1000.0;
    if (kept[i].heading) {
      path.points[i].heading = wrap_degrees(*kept[i].heading);
    } else if (seg_len > 1e-9) {
      path.points[i].heading = heading_of(seg);
    } else {
      path.points[i].heading = last_heading;
    }
    last_heading = path.points[i].heading;
    path.points[i].speed = kept[i].speed ? *kept[i].speed : norm(seg) / dt;
  }
  return path;
}

namespace {

// Index of the last point with t <= query, clamped to [0, n-2].
std::size_t segment_index(const EgoPath& path, Millis t) {
  const auto it = std::upper_bound(path.points.begin(), path.points.end(), t,
                                   [](Millis v, const PathPoint& p) { return v < p.t; });
  std::size_t i = it == path.points.begin() ? 0 : static_cast<std::size_t>(it - path.points.begin()) - 1;
  return std::min(i, path.points.size() - 2);
}

}  // namespace

double EgoPath::arc_length_at(Millis t) const {
  if (points.size() < 2) return 0.0;
  if (t <= points.front().t) return 0.0;
  if (t >= points.back().t) return arc_length.back();
  const std::size_t i = segment_index(*this, t);
  const double a = static_cast<double>(t - points[i].t) / static_cast<double>(points[i + 1].t - points[i].t);
  return arc_length[i] + (arc_length[i + 1] - arc_length[i]) * a;
}

EgoPose interpolate_pose(const EgoPath& path, Millis t) {
  if (path.points.empty()) throw std::invalid_argument("empty ego path");
  if (path.points.size() == 1 || t <= path.points.front().t) {
    const auto& p = path.points.front();
    return {p.position, p.heading, t < p.t};
  }
  if (t >= path.points.back().t) {
    const auto& p = path.points.back();
    return {p.position, p.heading, t > p.t};
  }
  const std::size_t i = segment_index(path, t);
  const auto& p0 = path.points[i];
  const auto& p1 = path.points[i + 1];
  if (t == p0.t) return {p0.position, p0.heading, false};
  const double a = static_cast<double>(t - p0.t) / static_cast<double>(p1.t - p0.t);
  return {lerp(p0.position, p1.position, a), lerp_heading(p0.heading, p1.heading, a), false};
}

Vec3 vehicle_dir_to_world(const EgoPose& pose, const Vec3& d) {
  const Vec3 fwd = heading_vector(pose.heading);
  const Vec3 left{-fwd.y, fwd.x, 0.0};
  return fwd * d.x + left * d.y + Vec3{0.0, 0.0, d.z};
}

Vec3 vehicle_to_world(const EgoPose& pose, const Vec3& p) {
  return pose.position + vehicle_dir_to_world(pose, p);
}

Vec3 world_to_vehicle(const EgoPose& pose, const Vec3& p) {
  const Vec3 fwd = heading_vector(pose.heading);
  const Vec3 left{-fwd.y, fwd.x, 0.0};
  const Vec3 d = p - pose.position;
  return {dot(d, fwd), dot(d, left), d.z};
}

}  // namespace drivelab
