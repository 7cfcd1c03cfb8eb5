#include "drivelab/validate.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <limits>
#include <sstream>

namespace drivelab {

const char* to_string(Severity s) {
  switch (s) {
    case Severity::error:
      return "error";
    case Severity::warning:
      return "warning";
    case Severity::info:
      return "info";
  }
  return "?";
}

void Report::error(std::string path, std::string message) {
  issues.push_back({Severity::error, std::move(path), std::move(message)});
}
void Report::warning(std::string path, std::string message) {
  issues.push_back({Severity::warning, std::move(path), std::move(message)});
}
void Report::info(std::string path, std::string message) {
  issues.push_back({Severity::info, std::move(path), std::move(message)});
}
void Report::merge(const Report& other) {
  issues.insert(issues.end(), other.issues.begin(), other.issues.end());
}

std::size_t Report::count(Severity s) const {
  return static_cast<std::size_t>(
      std::count_if(issues.begin(), issues.end(), [&](const Issue& i) { return i.severity == s; }));
}

bool Report::has(Severity s, const std::string& path_prefix, const std::string& message_part) const {
  return std::any_of(issues.begin(), issues.end(), [&](const Issue& i) {
    return i.severity == s && i.path.rfind(path_prefix, 0) == 0 &&
           i.message.find(message_part) != std::string::npos;
  });
}

void to_json(Json& j, const Issue& i) {
  j = Json{{"severity", to_string(i.severity)}, {"path", i.path}, {"message", i.message}};
}

void to_json(Json& j, const Report& r) {
  j = Json{{"errors", r.error_count()}, {"warnings", r.warning_count()}, {"issues", r.issues}};
}

std::string to_text(const Report& r) {
  std::ostringstream out;
  for (const auto& i : r.issues) {
    out << to_string(i.severity) << ": " << (i.path.empty() ? "<document>" : i.path) << ": "
        << i.message << '\n';
  }
  out << r.error_count() << " error(s), " << r.warning_count() << " warning(s)\n";
  return out.str();
}

bool is_relative_media_path(const std::string& path) {
  if (path.empty()) return false;
  if (path.front() == '/' || path.front() == '\\') return false;
  if (path.size() >= 2 && path[1] == ':') return false;  // drive letter
  return true;
}

namespace {

double orient(const Vec2& a, const Vec2& b, const Vec2& c) {
  return (b.u - a.u) * (c.v - a.v) - (b.v - a.v) * (c.u - a.u);
}

bool on_segment(const Vec2& a, const Vec2& b, const Vec2& p) {
  return std::min(a.u, b.u) <= p.u && p.u <= std::max(a.u, b.u) && std::min(a.v, b.v) <= p.v &&
         p.v <= std::max(a.v, b.v);
}

bool segments_intersect(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
  const double o1 = orient(a, b, c);
  const double o2 = orient(a, b, d);
  const double o3 = orient(c, d, a);
  const double o4 = orient(c, d, b);
  if (((o1 > 0 && o2 < 0) || (o1 < 0 && o2 > 0)) && ((o3 > 0 && o4 < 0) || (o3 < 0 && o4 > 0))) {
    return true;
  }
  if (o1 == 0 && on_segment(a, b, c)) return true;
  if (o2 == 0 && on_segment(a, b, d)) return true;
  if (o3 == 0 && on_segment(c, d, a)) return true;
  if (o4 == 0 && on_segment(c, d, b)) return true;
  return false;
}

}  // namespace

bool is_simple_polygon(const std::vector<Vec2>& ring) {
  const std::size_t n = ring.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    if (ring[i] == ring[(i + 1) % n]) return false;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = ring[i];
    const Vec2& b = ring[(i + 1) % n];
    for (std::size_t k = i + 1; k < n; ++k) {
      const bool adjacent = k == i + 1 || (i == 0 && k == n - 1);
      if (adjacent) continue;
      if (segments_intersect(a, b, ring[k], ring[(k + 1) % n])) return false;
    }
  }
  return true;
}

namespace {

std::string idx(const std::string& base, std::size_t i) {
  return base + "[" + std::to_string(i) + "]";
}

class Validator {
 public:
  explicit Validator(const ConfigDocument& doc) : doc_(doc) {}

  Report run() {
    if (doc_.schema_version != kSchemaVersion) {
      report_.error("schema_version", "unsupported schema version '" + doc_.schema_version + "'");
    }
    check_study_meta();
    check_participants();
    check_scene();
    for (std::size_t i = 0; i < doc_.sessions.size(); ++i) {
      check_session(doc_.sessions[i], idx("sessions", i));
    }
    if (doc_.sessions.empty()) report_.warning("sessions", "document has no sessions");
    check_annotations();
    return std::move(report_);
  }

 private:
  void check_study_meta() {
    if (doc_.study_meta.title.empty()) report_.warning("study_meta.title", "missing study title");
    std::set<std::string> seen;
    for (std::size_t i = 0; i < doc_.study_meta.conditions.size(); ++i) {
      if (!seen.insert(doc_.study_meta.conditions[i]).second) {
        report_.error(idx("study_meta.conditions", i),
                      "duplicate condition '" + doc_.study_meta.conditions[i] + "'");
      }
    }
  }

  void check_participants() {
    std::set<std::string> ids;
    std::vector<Rgb> colors;
    for (std::size_t i = 0; i < doc_.participants.size(); ++i) {
      const auto& p = doc_.participants[i];
      const std::string path = idx("participants", i);
      if (p.id.empty()) report_.error(path + ".id", "empty participant id");
      if (!ids.insert(p.id).second) report_.error(path + ".id", "duplicate participant id '" + p.id + "'");
      for (double c : {p.color.r, p.color.g, p.color.b}) {
        if (!std::isfinite(c) || c < 0.0 || c > 1.0) {
          report_.error(path + ".color", "color component outside [0,1]");
          break;
        }
      }
      if (std::find(colors.begin(), colors.end(), p.color) != colors.end()) {
        report_.error(path + ".color", "participant color is not unique");
      }
      colors.push_back(p.color);
      if (p.demographics.empty()) report_.info(path + ".demographics", "no personal data");
    }
  }

  void check_time(const std::string& path, Millis t, Millis duration) {
    if (t < 0 || t > duration) {
      report_.error(path, "timestamp " + std::to_string(t) + " outside [0, " +
                              std::to_string(duration) + "]");
    }
  }

  template <typename T, typename TimeOf>
  void check_sorted(const std::vector<T>& items, const std::string& path, TimeOf time_of) {
    for (std::size_t i = 1; i < items.size(); ++i) {
      if (time_of(items[i]) < time_of(items[i - 1])) {
        report_.error(idx(path, i), "list not sorted ascending by timestamp");
        return;
      }
    }
  }

  void check_participant_ref(const std::string& path, const std::string& id) {
    if (!doc_.find_participant(id)) report_.error(path, "unknown participant id '" + id + "'");
  }

  void check_rays(const std::vector<RaySample>& rays, RayModality expected, const std::string& path,
                  Millis duration) {
    for (std::size_t i = 0; i < rays.size(); ++i) {
      const auto& r = rays[i];
      const std::string p = idx(path, i);
      check_time(p + ".t", r.t, duration);
      if (!is_finite(r.origin) || !is_finite(r.direction)) {
        report_.error(p, "non-finite ray");
        continue;
      }
      if (std::abs(norm(r.direction) - 1.0) > kUnitTolerance) {
        report_.error(p + ".direction", "non-unit ray direction");
      }
      if (r.modality != expected) report_.error(p + ".modality", "modality does not match list");
    }
    check_sorted(rays, path, [](const RaySample& r) { return r.t; });
  }

  void check_stream(const SampledStream& s, const std::string& path, Millis duration) {
    if (!(std::isfinite(s.rate_hz) && s.rate_hz > 0.0)) {
      report_.error(path + ".rate_hz", "rate must be positive");
    }
    for (std::size_t i = 0; i < s.samples.size(); ++i) {
      check_time(idx(path + ".samples", i), s.samples[i].t, duration);
      if (!std::isfinite(s.samples[i].value)) {
        report_.error(idx(path + ".samples", i), "non-finite sample value (mark a gap instead)");
      }
    }
    check_sorted(s.samples, path + ".samples", [](const StreamSample& x) { return x.t; });
    for (std::size_t i = 0; i < s.gaps.size(); ++i) {
      const auto& g = s.gaps[i];
      if (g.t_start > g.t_end) report_.error(idx(path + ".gaps", i), "gap t_start > t_end");
      check_time(idx(path + ".gaps", i), g.t_start, duration);
      check_time(idx(path + ".gaps", i), g.t_end, duration);
    }
    if (s.samples.size() >= 3 && s.rate_hz > 0.0) {
      std::vector<Millis> diffs;
      for (std::size_t i = 1; i < s.samples.size(); ++i) {
        diffs.push_back(s.samples[i].t - s.samples[i - 1].t);
      }
      std::nth_element(diffs.begin(), diffs.begin() + diffs.size() / 2, diffs.end());
      const double median = static_cast<double>(diffs[diffs.size() / 2]);
      const double nominal = 1000.0 / s.rate_hz;
      if (std::abs(median - nominal) > kRateMismatchTolerance * nominal) {
        std::ostringstream msg;
        msg << "declared rate " << s.rate_hz << " Hz does not match median sample gap " << median
            << " ms";
        report_.warning(path + ".rate_hz", msg.str());
      }
    }
  }

  void check_skeleton(const SessionRecording& s, const std::string& path) {
    std::set<std::string> names;
    for (std::size_t i = 0; i < s.joint_names.size(); ++i) {
      if (!names.insert(s.joint_names[i]).second) {
        report_.error(idx(path + ".joint_names", i), "duplicate joint name");
      }
    }
    if (s.skeleton.empty()) {
      report_.warning(path + ".skeleton", "no skeleton data");
      return;
    }
    for (const char* required : {"head", "left_hand", "right_hand"}) {
      if (!names.count(required)) {
        report_.error(path + ".joint_names", std::string("missing required joint '") + required + "'");
      }
    }
    if (s.joint_names.size() > 25) report_.error(path + ".joint_names", "more than 25 joints");
    for (std::size_t f = 0; f < s.skeleton.size(); ++f) {
      const auto& frame = s.skeleton[f];
      const std::string fp = idx(path + ".skeleton", f);
      check_time(fp + ".t", frame.t, s.duration);
      if (frame.joints.size() != s.joint_names.size()) {
        report_.error(fp + ".joints", "joint count differs from joint_names");
        continue;
      }
      for (std::size_t k = 0; k < frame.joints.size(); ++k) {
        const auto& jp = frame.joints[k];
        if (!is_finite(jp.position) || !is_finite(jp.rotation)) {
          report_.error(idx(fp + ".joints", k), "non-finite joint pose");
        } else if (std::abs(norm(jp.rotation) - 1.0) > kUnitTolerance) {
          report_.error(idx(fp + ".joints", k), "non-unit quaternion");
        }
      }
    }
    check_sorted(s.skeleton, path + ".skeleton", [](const SkeletonFrame& x) { return x.t; });
  }

  void check_touches(const SessionRecording& s, const std::string& path) {
    for (std::size_t i = 0; i < s.touches.size(); ++i) {
      const auto& t = s.touches[i];
      const std::string p = idx(path + ".touches", i);
      check_time(p + ".t", t.t, s.duration);
      const MeshAsset* mesh = doc_.scene.find_mesh(t.mesh_id);
      if (!mesh) {
        report_.error(p + ".mesh_id", "unknown mesh id '" + t.mesh_id + "'");
        continue;
      }
      double best = std::numeric_limits<double>::infinity();
      for (const auto& tri : mesh->triangles) {
        if (tri[0] >= mesh->vertices.size() || tri[1] >= mesh->vertices.size() ||
            tri[2] >= mesh->vertices.size()) {
          continue;
        }
        const Vec3 c = closest_point_on_triangle(t.position, mesh->vertices[tri[0]],
                                                 mesh->vertices[tri[1]], mesh->vertices[tri[2]]);
        best = std::min(best, distance(c, t.position));
      }
      if (!(best <= kSurfaceTolerance)) {
        report_.error(p + ".position", "touch position farther than 1 cm from mesh surface");
      }
    }
    check_sorted(s.touches, path + ".touches", [](const SurfaceSample& x) { return x.t; });
  }

  void check_events(const SessionRecording& s, const std::string& path) {
    for (std::size_t i = 0; i < s.events.size(); ++i) {
      const auto& e = s.events[i];
      const std::string p = idx(path + ".events", i);
      if (e.id.empty()) report_.error(p + ".id", "empty event id");
      if (!event_ids_.insert(e.id).second) report_.error(p + ".id", "duplicate event id '" + e.id + "'");
      if (e.t_start > e.t_end) report_.error(p, "event t_start > t_end");
      check_time(p + ".t_start", e.t_start, s.duration);
      check_time(p + ".t_end", e.t_end, s.duration);
      check_participant_ref(p + ".participant_id", e.participant_id);
      if (!(e.confidence >= 0.0 && e.confidence <= 1.0)) {
        report_.error(p + ".confidence", "confidence outside [0,1]");
      }
    }
    check_sorted(s.events, path + ".events", [](const EventRecord& x) { return x.t_start; });
  }

  void check_session(const SessionRecording& s, const std::string& path) {
    check_participant_ref(path + ".participant_id", s.participant_id);
    const auto& conds = doc_.study_meta.conditions;
    if (!conds.empty() && std::find(conds.begin(), conds.end(), s.condition) == conds.end()) {
      report_.error(path + ".condition", "unknown condition '" + s.condition + "'");
    }
    if (s.duration < 0) report_.error(path + ".duration", "negative duration");

    std::set<std::string> stream_names;
    for (std::size_t i = 0; i < s.streams.size(); ++i) {
      if (!stream_names.insert(s.streams[i].name).second) {
        report_.error(idx(path + ".streams", i), "duplicate stream name");
      }
      check_stream(s.streams[i], idx(path + ".streams", i), s.duration);
    }
    check_skeleton(s, path);
    check_rays(s.gaze, RayModality::gaze, path + ".gaze", s.duration);
    check_rays(s.pointing, RayModality::pointing, path + ".pointing", s.duration);
    check_touches(s, path);

    for (std::size_t i = 0; i < s.speech.size(); ++i) {
      const auto& seg = s.speech[i];
      const std::string p = idx(path + ".speech", i);
      if (seg.t_start > seg.t_end) report_.error(p, "speech t_start > t_end");
      check_time(p + ".t_start", seg.t_start, s.duration);
      check_time(p + ".t_end", seg.t_end, s.duration);
    }
    check_sorted(s.speech, path + ".speech", [](const SpeechSegment& x) { return x.t_start; });
    check_events(s, path);

    for (std::size_t i = 0; i < s.ego_path.size(); ++i) {
      const auto& g = s.ego_path[i];
      const std::string p = idx(path + ".ego_path", i);
      check_time(p + ".t", g.t, s.duration);
      check_geo(p, g);
    }
    check_sorted(s.ego_path, path + ".ego_path", [](const GeoSample& x) { return x.t; });

    for (std::size_t i = 0; i < s.road_users.size(); ++i) {
      const auto& o = s.road_users[i];
      const std::string p = idx(path + ".road_users", i);
      check_time(p + ".t", o.t, s.duration);
      if (!is_finite(o.position)) report_.error(p + ".position", "non-finite position");
      if (o.object_id.empty()) report_.error(p + ".object_id", "empty object id");
    }
    check_sorted(s.road_users, path + ".road_users",
                 [](const TrackedObjectSample& x) { return x.t; });

    for (std::size_t i = 0; i < s.media.size(); ++i) {
      if (!is_relative_media_path(s.media[i].path)) {
        report_.error(idx(path + ".media", i) + ".path", "media path must be relative");
      }
    }
  }

  void check_geo(const std::string& path, const GeoSample& g) {
    if (!(std::isfinite(g.lat) && g.lat >= -90.0 && g.lat <= 90.0)) {
      report_.error(path + ".lat", "latitude outside [-90, 90]");
    }
    if (!(std::isfinite(g.lon) && g.lon >= -180.0 && g.lon <= 180.0)) {
      report_.error(path + ".lon", "longitude outside [-180, 180]");
    }
    if (!std::isfinite(g.alt)) report_.error(path + ".alt", "non-finite altitude");
    if (g.heading && !std::isfinite(*g.heading)) report_.error(path + ".heading", "non-finite heading");
    if (g.speed && !std::isfinite(*g.speed)) report_.error(path + ".speed", "non-finite speed");
  }

  void check_mesh(const MeshAsset& m, const std::string& path) {
    for (std::size_t i = 0; i < m.vertices.size(); ++i) {
      if (!is_finite(m.vertices[i])) report_.error(idx(path + ".vertices", i), "non-finite vertex");
    }
    for (std::size_t i = 0; i < m.triangles.size(); ++i) {
      const auto& t = m.triangles[i];
      const std::string p = idx(path + ".triangles", i);
      if (t[0] >= m.vertices.size() || t[1] >= m.vertices.size() || t[2] >= m.vertices.size()) {
        report_.error(p, "triangle index out of range");
        continue;
      }
      if (!(triangle_area(m.vertices[t[0]], m.vertices[t[1]], m.vertices[t[2]]) > kMinTriangleArea)) {
        report_.error(p, "degenerate triangle");
      }
    }
    if (!m.uv.empty()) {
      if (m.uv.size() != m.vertices.size()) {
        report_.error(path + ".uv", "uv count differs from vertex count");
      }
      for (std::size_t i = 0; i < m.uv.size(); ++i) {
        const auto& t = m.uv[i];
        if (!(t.u >= 0.0 && t.u <= 1.0 && t.v >= 0.0 && t.v <= 1.0)) {
          report_.error(idx(path + ".uv", i), "uv outside [0,1]^2");
          break;
        }
      }
    }
  }

  void check_scene() {
    const auto& scene = doc_.scene;
    check_geo("scene.origin", scene.origin);
    std::set<std::string> ids;
    std::size_t ego_count = 0;
    for (std::size_t i = 0; i < scene.meshes.size(); ++i) {
      const auto& m = scene.meshes[i];
      const std::string p = idx("scene.meshes", i);
      if (m.id.empty()) report_.error(p + ".id", "empty mesh id");
      if (!ids.insert(m.id).second) report_.error(p + ".id", "duplicate mesh id '" + m.id + "'");
      if (m.role == MeshRole::ego_exterior) ++ego_count;
      check_mesh(m, p);
    }
    const MeshAsset* ego = scene.find_mesh(scene.ego_vehicle);
    if (!ego) {
      report_.error("scene.ego_vehicle", "unknown ego-vehicle mesh '" + scene.ego_vehicle + "'");
    } else if (ego->role != MeshRole::ego_exterior) {
      report_.error("scene.ego_vehicle", "ego-vehicle mesh must have role ego_exterior");
    }
    if (ego_count != 1) {
      report_.error("scene.meshes", "expected exactly one ego_exterior mesh, found " +
                                        std::to_string(ego_count));
    }

    std::set<std::string> fp_ids;
    for (std::size_t i = 0; i < scene.footprints.size(); ++i) {
      const auto& f = scene.footprints[i];
      const std::string p = idx("scene.footprints", i);
      if (!fp_ids.insert(f.id).second) report_.error(p + ".id", "duplicate footprint id '" + f.id + "'");
      if (f.polygon.size() < 3) {
        report_.error(p + ".polygon", "footprint needs at least 3 vertices");
        continue;
      }
      std::vector<Vec2> ring;
      bool in_range = true;
      for (const auto& ll : f.polygon) {
        in_range = in_range && std::isfinite(ll.lat) && std::isfinite(ll.lon) && ll.lat >= -90.0 &&
                   ll.lat <= 90.0 && ll.lon >= -180.0 && ll.lon <= 180.0;
        ring.push_back({ll.lon, ll.lat});
      }
      if (!in_range) {
        report_.error(p + ".polygon", "footprint vertex outside lat/lon range");
      } else if (!is_simple_polygon(ring)) {
        report_.error(p + ".polygon", "footprint polygon is self-intersecting");
      }
      if (f.height && !(*f.height > 0.0 && std::isfinite(*f.height))) {
        report_.error(p + ".height", "building height must be positive");
      }
    }
  }

  void check_annotations() {
    std::set<std::string> ids;
    const Millis horizon = doc_.timeline_duration();
    for (std::size_t i = 0; i < doc_.annotations.size(); ++i) {
      const auto& a = doc_.annotations[i];
      const std::string p = idx("annotations", i);
      if (a.id.empty()) report_.error(p + ".id", "empty annotation id");
      if (!ids.insert(a.id).second) report_.error(p + ".id", "duplicate annotation id '" + a.id + "'");
      if (a.kind == AnnotationKind::label && (!a.t || !a.position)) {
        report_.error(p, "label annotations need both t and position");
      }
      if (a.t) check_time(p + ".t", *a.t, horizon);
      if (a.position && !is_finite(*a.position)) report_.error(p + ".position", "non-finite position");
      if (a.author.empty()) report_.warning(p + ".author", "annotation without author");
    }
  }

  const ConfigDocument& doc_;
  Report report_;
  std::set<std::string> event_ids_;
};

}  // namespace

Report validate(const ConfigDocument& doc) { return Validator(doc).run(); }

}  // namespace drivelab
