#include "drivelab/ingest/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "drivelab/geo/geodesy.hpp"
#include "drivelab/ingest/timestamps.hpp"
#include "drivelab/mesh_util.hpp"

namespace drivelab {

namespace {

SourceSpec parse_source(const std::string& name, const Json& j, const std::filesystem::path& base,
                        const ParserRegistry& registry, const std::string& at) {
  SourceSpec s;
  s.name = name;
  if (!j.is_object() || !j.contains("format") || !j.contains("path")) {
    throw ParseError(at + ": source needs 'format' and 'path'");
  }
  s.format = j["format"].get<std::string>();
  s.path = j["path"].get<std::string>();
  if (j.contains("options")) s.options = j["options"];
  if (!registry.knows(s.format)) throw ParseError(at + ": unknown format '" + s.format + "'");
  if (s.path.is_absolute()) throw ParseError(at + ": path must be relative to the manifest");
  if (!std::filesystem::exists(base / s.path)) {
    throw ParseError(at + ": file not found: " + (base / s.path).string());
  }
  return s;
}

Millis parse_t0(const Json& j, const std::string& at) {
  if (j.is_number_integer()) return j.get<Millis>();
  if (j.is_string()) {
    if (const auto ms = parse_iso8601(j.get<std::string>())) return *ms;
  }
  throw ParseError(at + ": t0 must be epoch milliseconds or an ISO-8601 string");
}

template <typename T>
void sort_by_time(std::vector<T>& v, Millis T::*field) {
  std::stable_sort(v.begin(), v.end(), [field](const T& a, const T& b) { return a.*field < b.*field; });
}

Millis max_time(const SessionRecording& s) {
  Millis m = 0;
  for (const auto& st : s.streams) {
    if (!st.samples.empty()) m = std::max(m, st.samples.back().t);
  }
  for (const auto& f : s.skeleton) m = std::max(m, f.t);
  for (const auto& r : s.gaze) m = std::max(m, r.t);
  for (const auto& r : s.pointing) m = std::max(m, r.t);
  for (const auto& x : s.touches) m = std::max(m, x.t);
  for (const auto& x : s.speech) m = std::max(m, x.t_end);
  for (const auto& e : s.events) m = std::max(m, e.t_end);
  for (const auto& g : s.ego_path) m = std::max(m, g.t);
  for (const auto& r : s.road_users) m = std::max(m, r.t);
  return m;
}

}  // namespace

SourceBundle parse_manifest(const Json& m, const std::filesystem::path& base_dir,
                            const ParserRegistry& registry) {
  SourceBundle b;
  b.base_dir = base_dir;
  try {
    if (m.contains("study_meta")) b.study_meta = m["study_meta"].get<StudyMeta>();
    if (m.contains("participants")) {
      for (const auto& p : m["participants"]) {
        ParticipantSpec ps;
        ps.id = p.at("id").get<std::string>();
        if (p.contains("color")) ps.color = p["color"].get<Rgb>();
        if (p.contains("demographics")) ps.demographics = p["demographics"].get<AttrMap>();
        b.participants.push_back(std::move(ps));
      }
    }
    const auto& sessions = m.at("sessions");
    for (std::size_t i = 0; i < sessions.size(); ++i) {
      const auto& sj = sessions[i];
      const std::string at = "sessions[" + std::to_string(i) + "]";
      SessionSpec ss;
      ss.participant_id = sj.at("participant_id").get<std::string>();
      ss.condition = sj.value("condition", "");
      if (sj.contains("t0")) ss.t0 = parse_t0(sj["t0"], at + ".t0");
      if (sj.contains("duration")) ss.duration = sj["duration"].get<Millis>();
      if (sj.contains("sources")) {
        for (const auto& [name, src] : sj["sources"].items()) {
          ss.sources.push_back(parse_source(name, src, base_dir, registry, at + ".sources." + name));
        }
      }
      b.sessions.push_back(std::move(ss));
    }
    if (m.contains("scene")) {
      const auto& sc = m["scene"];
      if (sc.contains("origin")) {
        GeoSample o;
        o.lat = sc["origin"].at("lat").get<double>();
        o.lon = sc["origin"].at("lon").get<double>();
        o.alt = sc["origin"].value("alt", 0.0);
        b.origin = o;
      }
      if (sc.contains("ego_vehicle")) b.ego_vehicle = sc["ego_vehicle"].get<std::string>();
      if (sc.contains("sources")) {
        for (const auto& [name, src] : sc["sources"].items()) {
          b.scene_sources.push_back(parse_source(name, src, base_dir, registry, "scene.sources." + name));
        }
      }
    }
    if (m.contains("detectors")) {
      for (const auto& d : m["detectors"]) {
        DetectorSpec ds;
        ds.name = d.at("name").get<std::string>();
        if (d.contains("params")) {
          for (const auto& [k, v] : d["params"].items()) {
            ds.params[k] = v.is_string() ? v.get<std::string>() : v.dump();
          }
        }
        make_detector(ds.name, ds.params);  // reject unknown names early
        b.detectors.push_back(std::move(ds));
      }
    }
  } catch (const Json::exception& e) {
    throw ParseError(std::string("manifest: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string("manifest: ") + e.what());
  }
  return b;
}

SourceBundle load_manifest(const std::filesystem::path& path, const ParserRegistry& registry) {
  Json j;
  try {
    j = Json::parse(read_file(path));
  } catch (const Json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return parse_manifest(j, path.parent_path(), registry);
}

Rgb palette_color(std::size_t i) {
  static const Rgb kBase[] = {{0.894, 0.102, 0.110}, {0.216, 0.494, 0.722}, {0.302, 0.686, 0.290},
                              {0.596, 0.306, 0.639}, {1.000, 0.498, 0.000}, {0.651, 0.337, 0.157},
                              {0.969, 0.506, 0.749}, {0.400, 0.400, 0.400}};
  constexpr std::size_t n = sizeof(kBase) / sizeof(kBase[0]);
  if (i < n) return kBase[i];
  // Golden-angle hue walk, fixed saturation/value.
  const double h = std::fmod(static_cast<double>(i - n) * 137.50776405, 360.0) / 60.0;
  const double s = 0.65;
  const double v = 0.85;
  const double c = v * s;
  const double x = c * (1.0 - std::abs(std::fmod(h, 2.0) - 1.0));
  double r = 0, g = 0, b = 0;
  switch (static_cast<int>(h)) {
    case 0: r = c; g = x; break;
    case 1: r = x; g = c; break;
    case 2: g = c; b = x; break;
    case 3: g = x; b = c; break;
    case 4: r = x; b = c; break;
    default: r = c; b = x; break;
  }
  const double m = v - c;
  return {r + m, g + m, b + m};
}

MeshAsset make_ground_ribbon(const std::vector<GeoSample>& ego_path, const GeoSample& origin, double width) {
  MeshAsset m;
  m.id = "ground";
  m.name = "road";
  m.role = MeshRole::ground;
  const LocalFrame frame = make_local_frame(origin);
  std::vector<Vec3> pts;
  for (const auto& g : ego_path) {
    const Vec3 p = geo_to_local(frame, g);
    if (pts.empty() || distance(pts.back(), p) >= 2.0) pts.push_back(p);
  }
  if (pts.size() < 2) return m;
  std::vector<double> arc(pts.size(), 0.0);
  for (std::size_t i = 1; i < pts.size(); ++i) arc[i] = arc[i - 1] + distance(pts[i - 1], pts[i]);
  const double half = 0.5 * width;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Vec3 a = pts[i == 0 ? 0 : i - 1];
    const Vec3 b = pts[i + 1 < pts.size() ? i + 1 : i];
    Vec3 dir{b.x - a.x, b.y - a.y, 0.0};
    dir = normalized(dir);
    const Vec3 left{-dir.y, dir.x, 0.0};
    const double u = arc[i] / arc.back();
    m.vertices.push_back(pts[i] - left * half);
    m.vertices.push_back(pts[i] + left * half);
    m.uv.push_back({u, 0.0});
    m.uv.push_back({u, 1.0});
  }
  for (std::uint32_t i = 0; i + 1 < pts.size(); ++i) {
    const std::uint32_t r0 = 2 * i, l0 = 2 * i + 1, r1 = 2 * i + 2, l1 = 2 * i + 3;
    for (const Triangle& t : {Triangle{r0, r1, l1}, Triangle{r0, l1, l0}}) {
      if (triangle_area(m.vertices[t[0]], m.vertices[t[1]], m.vertices[t[2]]) > 1e-6) m.triangles.push_back(t);
    }
  }
  return m;
}

ConfigDocument ingest(const SourceBundle& bundle, const StudyMeta& study_meta, Report& report,
                      const ParserRegistry& registry) {
  ConfigDocument doc;
  doc.study_meta = study_meta;
  for (const auto& s : bundle.sessions) {
    const auto& c = doc.study_meta.conditions;
    if (!s.condition.empty() && std::find(c.begin(), c.end(), s.condition) == c.end()) {
      doc.study_meta.conditions.push_back(s.condition);
    }
  }

  std::vector<ParticipantSpec> people = bundle.participants;
  for (const auto& s : bundle.sessions) {
    const bool known = std::any_of(people.begin(), people.end(),
                                   [&](const ParticipantSpec& p) { return p.id == s.participant_id; });
    if (!known) people.push_back({s.participant_id, std::nullopt, {}});
  }
  std::set<std::tuple<double, double, double>> used_colors;
  for (const auto& p : people) {
    if (p.color) used_colors.insert({p.color->r, p.color->g, p.color->b});
  }
  std::size_t next_color = 0;
  for (const auto& p : people) {
    Participant out;
    out.id = p.id;
    out.demographics = p.demographics;
    if (p.color) {
      out.color = *p.color;
    } else {
      Rgb c;
      do {
        c = palette_color(next_color++);
      } while (used_colors.count({c.r, c.g, c.b}));
      used_colors.insert({c.r, c.g, c.b});
      out.color = c;
    }
    doc.participants.push_back(std::move(out));
  }

  for (std::size_t si = 0; si < bundle.sessions.size(); ++si) {
    const auto& spec = bundle.sessions[si];
    SessionRecording s;
    s.participant_id = spec.participant_id;
    s.condition = spec.condition;
    s.t0 = spec.t0;
    for (const auto& src : spec.sources) {
      const SessionParser* parser = registry.session_parser(src.format);
      if (!parser) {
        throw ParseError("sessions[" + std::to_string(si) + "].sources." + src.name + ": format '" +
                         src.format + "' is not a session source");
      }
      const SourceContext ctx{src, bundle.base_dir / src.path, s.t0};
      try {
        (*parser)(ctx, s, report);
      } catch (const Json::exception& e) {
        throw ParseError(src.path.generic_string() + ": " + e.what());
      } catch (const std::invalid_argument& e) {
        throw ParseError(src.path.generic_string() + ": " + e.what());
      }
    }
    if (s.skeleton.empty() && s.streams.empty()) {
      throw ParseError("sessions[" + std::to_string(si) + "]: no skeleton or stream data (empty session)");
    }

    for (auto& st : s.streams) sort_by_time(st.samples, &StreamSample::t);
    sort_by_time(s.skeleton, &SkeletonFrame::t);
    sort_by_time(s.gaze, &RaySample::t);
    sort_by_time(s.pointing, &RaySample::t);
    sort_by_time(s.touches, &SurfaceSample::t);
    sort_by_time(s.speech, &SpeechSegment::t_start);
    sort_events(s.events);
    sort_by_time(s.ego_path, &GeoSample::t);
    sort_by_time(s.road_users, &TrackedObjectSample::t);

    const Millis observed = max_time(s);
    s.duration = spec.duration.value_or(observed);
    if (s.duration < observed) {
      report.warning("sessions[" + std::to_string(si) + "].duration",
                     "declared duration shorter than the data; extended to " + std::to_string(observed));
      s.duration = observed;
    }
    if (!s.ego_path.empty() &&
        std::all_of(s.ego_path.begin(), s.ego_path.end(), [](const GeoSample& g) { return g.alt == 0.0; })) {
      report.info("sessions[" + std::to_string(si) + "].ego_path", "no altitude in GPS data; path treated as planar at alt 0");
    }
    doc.sessions.push_back(std::move(s));
  }

  // Scene.
  SceneDescription& scene = doc.scene;
  if (bundle.origin) {
    scene.origin = *bundle.origin;
  } else {
    const auto it = std::find_if(doc.sessions.begin(), doc.sessions.end(),
                                 [](const SessionRecording& s) { return !s.ego_path.empty(); });
    if (it != doc.sessions.end()) {
      const GeoSample& g = it->ego_path.front();
      scene.origin.lat = g.lat;
      scene.origin.lon = g.lon;
      scene.origin.alt = g.alt;
    } else {
      report.warning("scene.origin", "no GPS data; scene origin left at 0,0");
    }
  }
  for (const auto& src : bundle.scene_sources) {
    const SceneParser* parser = registry.scene_parser(src.format);
    if (!parser) throw ParseError("scene.sources." + src.name + ": format '" + src.format + "' is not a scene source");
    const SourceContext ctx{src, bundle.base_dir / src.path, 0};
    (*parser)(ctx, scene, report);
  }

  const auto ego = std::find_if(scene.meshes.begin(), scene.meshes.end(),
                                [](const MeshAsset& m) { return m.role == MeshRole::ego_exterior; });
  if (bundle.ego_vehicle) {
    scene.ego_vehicle = *bundle.ego_vehicle;
  } else if (ego != scene.meshes.end()) {
    scene.ego_vehicle = ego->id;
  } else {
    MeshAsset box = make_box_mesh("ego", MeshRole::ego_exterior, {-1.0, -0.9, 0.0}, {3.5, 0.9, 1.5});
    box.name = "ego vehicle";
    scene.ego_vehicle = box.id;
    scene.meshes.push_back(std::move(box));
  }
  const bool has_ground = std::any_of(scene.meshes.begin(), scene.meshes.end(),
                                      [](const MeshAsset& m) { return m.role == MeshRole::ground; });
  if (!has_ground) {
    const auto it = std::find_if(doc.sessions.begin(), doc.sessions.end(),
                                 [](const SessionRecording& s) { return s.ego_path.size() >= 2; });
    if (it != doc.sessions.end()) {
      MeshAsset ground = make_ground_ribbon(it->ego_path, scene.origin);
      if (!ground.triangles.empty()) scene.meshes.push_back(std::move(ground));
    }
  }

  if (!bundle.detectors.empty()) {
    std::vector<std::unique_ptr<Detector>> owned;
    std::vector<const Detector*> dets;
    for (const auto& d : bundle.detectors) {
      owned.push_back(make_detector(d.name, d.params));
      dets.push_back(owned.back().get());
    }
    doc = run_detectors(std::move(doc), dets, &report);
  }
  return doc;
}

}  // namespace drivelab
