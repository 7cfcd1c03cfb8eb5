#pragma once

#include <string>
#include <vector>

#include "drivelab/geo/ego_path.hpp"
#include "drivelab/json_io.hpp"
#include "drivelab/model.hpp"
#include "drivelab/validate.hpp"

namespace drivelab {

inline constexpr double kLayoutBaseHeight = 2.0;  // metres above the path
inline constexpr double kLaneSpacing = 0.5;
inline constexpr double kClusterGap = 1.0;  // arc-length metres

enum class LayoutMode { collapsed, exploded };

struct PathEventEntry {
  std::string event_id;
  std::string participant_id;
  Vec3 path_position;  // ground point on the path, scene frame
  double arc_length = 0.0;
  double vertical_offset = kLayoutBaseHeight;
  int lane_index = 0;
  std::size_t cluster = 0;
  bool clamped = false;  // event start outside the path's time range
};

struct PathEventLayout {
  LayoutMode mode = LayoutMode::exploded;
  std::vector<PathEventEntry> entries;  // ordered by (t_start, event id)
};

/// Anchors each event at the path pose of its start time. Anchors whose
/// sorted arc lengths are within kClusterGap of a neighbour share a cluster;
/// inside a cluster lanes follow (participant rank, t_start, id), where the
/// rank is the position in `participant_order` (unlisted participants last).
PathEventLayout layout_path_events(const std::vector<EventRecord>& events, const EgoPath& path,
                                   const std::vector<std::string>& participant_order,
                                   LayoutMode mode = LayoutMode::exploded);

/// Layout of every event in the document along the first session path. Events
/// of other sessions are anchored on their own path and projected onto that
/// reference path by nearest point.
PathEventLayout layout_document_events(const ConfigDocument& doc, LayoutMode mode = LayoutMode::exploded,
                                       Report* report = nullptr);

void to_json(Json& j, const PathEventLayout& l);

}  // namespace drivelab
