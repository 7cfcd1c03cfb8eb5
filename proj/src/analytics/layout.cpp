#include "drivelab/analytics/layout.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <optional>

#include "drivelab/geo/geodesy.hpp"

namespace drivelab {

namespace {

struct Anchored {
  const EventRecord* event;
  Vec3 position;
  double arc;
  bool clamped;
};

// Arc length of the point on the path nearest to p.
double project_arc(const EgoPath& path, const Vec3& p) {
  double best = std::numeric_limits<double>::infinity();
  double arc = 0.0;
  for (std::size_t i = 0; i + 1 < path.points.size(); ++i) {
    const Vec3 a = path.points[i].position;
    const Vec3 ab = path.points[i + 1].position - a;
    const double len2 = dot(ab, ab);
    const double s = len2 > 0.0 ? std::clamp(dot(p - a, ab) / len2, 0.0, 1.0) : 0.0;
    const double d = distance(a + ab * s, p);
    if (d < best) {
      best = d;
      arc = path.arc_length[i] + s * (path.arc_length[i + 1] - path.arc_length[i]);
    }
  }
  return arc;
}

PathEventLayout arrange(std::vector<Anchored> items, const std::vector<std::string>& order, LayoutMode mode) {
  auto rank = [&](const std::string& pid) {
    const auto it = std::find(order.begin(), order.end(), pid);
    return static_cast<std::size_t>(it - order.begin());
  };
  auto by_time = [](const Anchored& a, const Anchored& b) {
    if (a.event->t_start != b.event->t_start) return a.event->t_start < b.event->t_start;
    return a.event->id < b.event->id;
  };
  std::stable_sort(items.begin(), items.end(), by_time);

  std::vector<std::size_t> by_arc(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) by_arc[i] = i;
  std::stable_sort(by_arc.begin(), by_arc.end(),
                   [&](std::size_t a, std::size_t b) { return items[a].arc < items[b].arc; });

  PathEventLayout out;
  out.mode = mode;
  out.entries.resize(items.size());
  std::size_t cluster = 0;
  std::size_t begin = 0;
  while (begin < by_arc.size()) {
    std::size_t end = begin + 1;
    while (end < by_arc.size() && items[by_arc[end]].arc - items[by_arc[end - 1]].arc <= kClusterGap) ++end;
    std::vector<std::size_t> members(by_arc.begin() + static_cast<long>(begin), by_arc.begin() + static_cast<long>(end));
    std::sort(members.begin(), members.end(), [&](std::size_t a, std::size_t b) {
      const auto ra = rank(items[a].event->participant_id);
      const auto rb = rank(items[b].event->participant_id);
      if (ra != rb) return ra < rb;
      return by_time(items[a], items[b]);
    });
    for (std::size_t lane = 0; lane < members.size(); ++lane) {
      const Anchored& it = items[members[lane]];
      PathEventEntry& e = out.entries[members[lane]];
      e.event_id = it.event->id;
      e.participant_id = it.event->participant_id;
      e.path_position = it.position;
      e.arc_length = it.arc;
      e.lane_index = static_cast<int>(lane);
      e.vertical_offset =
          mode == LayoutMode::exploded ? kLayoutBaseHeight + kLaneSpacing * static_cast<double>(lane) : kLayoutBaseHeight;
      e.cluster = cluster;
      e.clamped = it.clamped;
    }
    ++cluster;
    begin = end;
  }
  return out;
}

}  // namespace

PathEventLayout layout_path_events(const std::vector<EventRecord>& events, const EgoPath& path,
                                   const std::vector<std::string>& participant_order, LayoutMode mode) {
  std::vector<Anchored> items;
  for (const auto& e : events) {
    const EgoPose pose = interpolate_pose(path, e.t_start);
    items.push_back({&e, pose.position, path.arc_length_at(e.t_start), pose.clamped});
  }
  return arrange(std::move(items), participant_order, mode);
}

PathEventLayout layout_document_events(const ConfigDocument& doc, LayoutMode mode, Report* report) {
  const LocalFrame frame = make_local_frame(doc.scene.origin);
  std::vector<std::optional<EgoPath>> paths(doc.sessions.size());
  std::optional<std::size_t> reference;
  for (std::size_t i = 0; i < doc.sessions.size(); ++i) {
    if (doc.sessions[i].ego_path.size() < 2) continue;
    paths[i] = build_ego_path(doc.sessions[i].ego_path, frame);
    if (!reference) reference = i;
  }
  std::vector<std::string> order;
  for (const auto& p : doc.participants) order.push_back(p.id);
  std::vector<Anchored> items;
  for (std::size_t i = 0; i < doc.sessions.size(); ++i) {
    if (!paths[i]) {
      if (report && !doc.sessions[i].events.empty()) {
        report->warning("sessions[" + std::to_string(i) + "]", "no ego path, events not laid out");
      }
      continue;
    }
    for (const auto& e : doc.sessions[i].events) {
      const EgoPose pose = interpolate_pose(*paths[i], e.t_start);
      const double arc = i == *reference ? paths[i]->arc_length_at(e.t_start) : project_arc(*paths[*reference], pose.position);
      items.push_back({&e, pose.position, arc, pose.clamped});
    }
  }
  return arrange(std::move(items), order, mode);
}

void to_json(Json& j, const PathEventLayout& l) {
  Json entries = Json::array();
  for (const auto& e : l.entries) {
    entries.push_back({{"event_id", e.event_id},
                       {"participant_id", e.participant_id},
                       {"path_position", e.path_position},
                       {"arc_length", e.arc_length},
                       {"vertical_offset", e.vertical_offset},
                       {"lane_index", e.lane_index},
                       {"cluster", e.cluster},
                       {"clamped", e.clamped}});
  }
  j = {{"mode", l.mode == LayoutMode::exploded ? "exploded" : "collapsed"}, {"entries", entries}};
}

}  // namespace drivelab
