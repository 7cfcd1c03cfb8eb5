#include "drivelab/analytics/portals.hpp"

#include <cctype>
#include <sstream>
#include <stdexcept>

#include "drivelab/geo/geodesy.hpp"
#include "drivelab/skeleton.hpp"

namespace drivelab {

namespace {

std::string lower(const std::string& s) {
  std::string out = s;
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

const std::string* attr(const EventRecord& e, const std::string& key) {
  const auto it = e.attrs.find(key);
  return it == e.attrs.end() || it->second.empty() ? nullptr : &it->second;
}

// Sample nearest to t; ties go to the earlier sample.
const RaySample* nearest_ray(const std::vector<RaySample>& rays, Millis t) {
  const RaySample* best = nullptr;
  for (const auto& r : rays) {
    if (!best || std::llabs(r.t - t) < std::llabs(best->t - t)) best = &r;
  }
  return best;
}

Vec3 surface_centroid(const MeshAsset& m) {
  Vec3 sum;
  double area = 0.0;
  for (const auto& t : m.triangles) {
    const Vec3 &a = m.vertices[t[0]], &b = m.vertices[t[1]], &c = m.vertices[t[2]];
    const double w = triangle_area(a, b, c);
    sum += (a + b + c) * (w / 3.0);
    area += w;
  }
  if (area > 0.0) return sum / area;
  Vec3 mean;
  for (const auto& v : m.vertices) mean += v;
  return m.vertices.empty() ? mean : mean / static_cast<double>(m.vertices.size());
}

std::optional<std::size_t> match_scene_object(const SceneRaycaster& scene, const std::string& referent) {
  const auto& meshes = scene.meshes();
  const std::string want = lower(referent);
  for (std::size_t i = 0; i < meshes.size(); ++i) {
    if (lower(meshes[i].id) == want || (!meshes[i].name.empty() && lower(meshes[i].name) == want)) return i;
  }
  const std::string norm_want = normalize_name(referent);
  if (norm_want.empty()) return std::nullopt;
  for (std::size_t i = 0; i < meshes.size(); ++i) {
    if (normalize_name(meshes[i].id) == norm_want || normalize_name(meshes[i].name) == norm_want) return i;
  }
  return std::nullopt;
}

}  // namespace

const char* to_string(PortalMode m) { return m == PortalMode::direct ? "direct" : "indirect"; }

std::string normalize_name(const std::string& s) {
  std::string out;
  std::string token;
  auto flush = [&] {
    if (!token.empty() && token != "the" && token != "a" && token != "an") {
      if (!out.empty()) out += ' ';
      out += token;
    }
    token.clear();
  };
  for (char c : s) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isalnum(u)) token += static_cast<char>(std::tolower(u));
    else flush();
  }
  flush();
  return out;
}

OfflineGazetteer OfflineGazetteer::parse(const Json& j) {
  if (!j.is_array()) throw ParseError("gazetteer: expected an array");
  std::vector<PlaceRecord> places;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const Json& e = j[i];
    if (!e.is_object() || !e.contains("name") || !e["name"].is_string() || !e.contains("lat") ||
        !e["lat"].is_number() || !e.contains("lon") || !e["lon"].is_number()) {
      throw ParseError("gazetteer[" + std::to_string(i) + "]: expected {name, lat, lon}");
    }
    places.push_back({e["name"].get<std::string>(), e["lat"].get<double>(), e["lon"].get<double>()});
  }
  return OfflineGazetteer(std::move(places));
}

OfflineGazetteer OfflineGazetteer::load(const std::filesystem::path& path) {
  return parse(parse_json(read_file(path), path.string()));
}

std::optional<PlaceRecord> OfflineGazetteer::lookup(const std::string& query) const {
  const std::string want = lower(query);
  for (const auto& p : places_) {
    if (lower(p.name) == want) return p;
  }
  const std::string norm_want = normalize_name(query);
  if (norm_want.empty()) return std::nullopt;
  for (const auto& p : places_) {
    if (normalize_name(p.name) == norm_want) return p;
  }
  return std::nullopt;
}

PortalResolution resolve_portal(const EventRecord& event, const SessionRecording& session,
                                const SceneRaycaster& scene, const EgoPath* path, const PlaceIndex* places) {
  const std::string* modality = attr(event, "modality");
  if (event.kind != EventKind::interaction || !modality ||
      (*modality != "gaze" && *modality != "pointing" && *modality != "speech")) {
    throw std::invalid_argument("event " + event.id + " is not a gaze, pointing or speech interaction");
  }
  PortalResolution r;
  r.event_id = event.id;
  r.modality = *modality;
  const Millis mid = event.t_start + (event.t_end - event.t_start) / 2;
  std::optional<EgoPose> pose;
  if (path && !path->empty()) pose = interpolate_pose(*path, mid);
  r.frame = pose ? "scene" : "vehicle";
  auto to_frame = [&](const Vec3& p) { return pose ? vehicle_to_world(*pose, p) : p; };

  if (*modality != "speech") {
    r.mode = PortalMode::direct;
    const RaySample* ray = nearest_ray(*modality == "gaze" ? session.gaze : session.pointing, mid);
    if (!ray) return r;
    std::optional<EgoPose> ray_pose;
    if (path && !path->empty()) ray_pose = interpolate_pose(*path, ray->t);
    const Vec3 dir = normalized(ray->direction);
    const Vec3 anchor_v = ray->origin + dir * kPortalOffset;
    r.anchor = ray_pose ? vehicle_to_world(*ray_pose, anchor_v) : anchor_v;
    const auto hit = scene.cast(ray->origin, dir, ray_pose ? &*ray_pose : nullptr, kPortalMaxDistance);
    if (!hit) return r;
    r.resolved = true;
    r.target = scene.meshes()[hit->target].id;
    r.hit_point = hit->scene_point;
    r.camera = PortalCamera{r.anchor, hit->scene_point};
    return r;
  }

  // Speech: portal sits beside the speaker's head.
  Vec3 head{0.0, 0.0, 1.2};
  if (const auto idx = session.joint_index("head")) {
    if (const auto frame = sample_skeleton(session, mid); frame && *idx < frame->joints.size()) {
      head = frame->joints[*idx].position;
    }
  }
  r.anchor = to_frame(head + Vec3{0.0, kSpeechAnchorSide, 0.0});
  const std::string* referent = attr(event, "referent");
  r.query = referent ? *referent : std::string{};
  if (referent) {
    if (const auto i = match_scene_object(scene, *referent)) {
      const MeshAsset& m = scene.meshes()[*i];
      r.mode = PortalMode::direct;
      r.resolved = true;
      r.target = m.id;
      Vec3 c = surface_centroid(m);
      if (scene.vehicle_frame(*i)) c = to_frame(c);
      r.hit_point = c;
      r.camera = PortalCamera{r.anchor, c};
      return r;
    }
  }
  r.mode = PortalMode::indirect;
  if (referent && places) r.place = places->lookup(*referent);
  r.resolved = r.place.has_value();
  return r;
}

std::vector<PortalResolution> resolve_portals(const ConfigDocument& doc, const PlaceIndex* places, Report* report) {
  const SceneRaycaster scene(doc.scene, report);
  const LocalFrame frame = make_local_frame(doc.scene.origin);
  std::vector<PortalResolution> out;
  for (std::size_t s = 0; s < doc.sessions.size(); ++s) {
    const auto& session = doc.sessions[s];
    std::optional<EgoPath> path;
    if (session.ego_path.size() >= 2) path = build_ego_path(session.ego_path, frame);
    for (std::size_t e = 0; e < session.events.size(); ++e) {
      const auto& ev = session.events[e];
      const std::string* modality = attr(ev, "modality");
      if (ev.kind != EventKind::interaction || !modality) continue;
      if (*modality != "gaze" && *modality != "pointing" && *modality != "speech") continue;
      out.push_back(resolve_portal(ev, session, scene, path ? &*path : nullptr, places));
      if (report && !out.back().resolved) {
        report->info("sessions[" + std::to_string(s) + "].events[" + std::to_string(e) + "]",
                     "portal unresolved for " + ev.id);
      }
    }
  }
  return out;
}

void to_json(Json& j, const PlaceRecord& p) { j = {{"name", p.name}, {"lat", p.lat}, {"lon", p.lon}}; }

void to_json(Json& j, const PortalResolution& r) {
  j = {{"event_id", r.event_id}, {"mode", to_string(r.mode)}, {"modality", r.modality},
       {"frame", r.frame},       {"anchor", r.anchor},          {"resolved", r.resolved}};
  if (r.mode == PortalMode::direct) {
    Json target = Json::object();
    if (r.resolved) target = {{"mesh_id", r.target}, {"point", *r.hit_point}};
    j["target"] = target;
    if (r.camera) j["camera"] = {{"position", r.camera->position}, {"look_at", r.camera->look_at}};
  } else {
    j["target"] = {{"query", r.query}, {"result", r.place ? Json(*r.place) : Json("unresolved")}};
  }
}

}  // namespace drivelab
