#include "drivelab/geo/road_users.hpp"

#include <map>

namespace drivelab {

std::vector<PlacedObject> place_road_users(const std::vector<TrackedObjectSample>& samples, Millis t) {
  struct Neighbours {
    const TrackedObjectSample* before = nullptr;  // latest with s.t <= t
    const TrackedObjectSample* after = nullptr;   // earliest with s.t >= t
  };
  std::map<std::string, Neighbours> by_id;
  for (const auto& s : samples) {
    auto& n = by_id[s.object_id];
    if (s.t <= t && (!n.before || s.t >= n.before->t)) n.before = &s;
    if (s.t >= t && (!n.after || s.t < n.after->t)) n.after = &s;
  }
  std::vector<PlacedObject> out;
  for (const auto& [id, n] : by_id) {
    const bool before_ok = n.before && t - n.before->t <= kRoadUserWindow;
    const bool after_ok = n.after && n.after->t - t <= kRoadUserWindow;
    if (!before_ok && !after_ok) continue;
    PlacedObject o;
    o.object_id = id;
    if (n.before && n.after && n.before->t != n.after->t) {
      const double a = static_cast<double>(t - n.before->t) / static_cast<double>(n.after->t - n.before->t);
      o.position = lerp(n.before->position, n.after->position, a);
      o.object_class = a < 0.5 ? n.before->object_class : n.after->object_class;
    } else {
      const TrackedObjectSample* s = before_ok ? n.before : n.after;
      o.position = s->position;
      o.object_class = s->object_class;
    }
    out.push_back(std::move(o));
  }
  return out;
}

}  // namespace drivelab
