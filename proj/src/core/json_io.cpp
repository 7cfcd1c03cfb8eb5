#include "drivelab/json_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "drivelab/obj.hpp"

namespace drivelab {

// ---------------------------------------------------------------------------
// Canonical writer

std::string format_double(double v) {
  if (!std::isfinite(v)) throw NonFiniteError("non-finite number cannot be serialized");
  if (v == 0.0) return "0";  // also folds -0.0
  // Shortest round-trip digits, then placed the way ECMAScript prints numbers.
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::scientific);
  const std::string sci(buf, res.ptr);
  const auto e = sci.find('e');
  std::string out = v < 0 ? "-" : "";
  std::string digits;
  for (std::size_t i = v < 0 ? 1 : 0; i < e; ++i) {
    if (sci[i] != '.') digits += sci[i];
  }
  const int k = static_cast<int>(digits.size());
  const int n = std::stoi(sci.substr(e + 1)) + 1;
  if (k <= n && n <= 21) {
    out += digits + std::string(static_cast<std::size_t>(n - k), '0');
  } else if (0 < n && n <= 21) {
    out += digits.substr(0, static_cast<std::size_t>(n)) + "." + digits.substr(static_cast<std::size_t>(n));
  } else if (-6 < n && n <= 0) {
    out += "0." + std::string(static_cast<std::size_t>(-n), '0') + digits;
  } else {
    out += digits.substr(0, 1);
    if (k > 1) out += "." + digits.substr(1);
    out += (n - 1 < 0 ? "e-" : "e+") + std::to_string(std::abs(n - 1));
  }
  return out;
}

namespace {

void write_canonical(std::string& out, const Json& j) {
  switch (j.type()) {
    case Json::value_t::null:
      out += "null";
      break;
    case Json::value_t::boolean:
      out += j.get<bool>() ? "true" : "false";
      break;
    case Json::value_t::number_integer:
      out += std::to_string(j.get<std::int64_t>());
      break;
    case Json::value_t::number_unsigned:
      out += std::to_string(j.get<std::uint64_t>());
      break;
    case Json::value_t::number_float:
      out += format_double(j.get<double>());
      break;
    case Json::value_t::string:
      out += j.dump(-1, ' ', false, Json::error_handler_t::strict);
      break;
    case Json::value_t::array: {
      out += '[';
      bool first = true;
      for (const auto& e : j) {
        if (!first) out += ',';
        first = false;
        write_canonical(out, e);
      }
      out += ']';
      break;
    }
    case Json::value_t::object: {
      out += '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ',';
        first = false;
        out += Json(it.key()).dump(-1, ' ', false, Json::error_handler_t::strict);
        out += ':';
        write_canonical(out, it.value());
      }
      out += '}';
      break;
    }
    default:
      throw ParseError("unsupported JSON value in canonical output");
  }
}

Millis get_millis(const Json& j, const char* key) {
  const Json& v = j.at(key);
  if (!v.is_number_integer() && !v.is_number_unsigned()) {
    throw ParseError(std::string("field '") + key + "' must be an integer millisecond value");
  }
  return v.get<Millis>();
}

template <typename T>
void get_opt(const Json& j, const char* key, std::optional<T>& out) {
  if (auto it = j.find(key); it != j.end() && !it->is_null()) {
    out = it->get<T>();
  } else {
    out.reset();
  }
}

template <typename T>
T get_or(const Json& j, const char* key, T fallback) {
  if (auto it = j.find(key); it != j.end() && !it->is_null()) return it->get<T>();
  return fallback;
}

void expect_array(const Json& j, std::size_t n, const char* what) {
  if (!j.is_array() || j.size() != n) {
    throw ParseError(std::string(what) + " must be an array of " + std::to_string(n) + " numbers");
  }
}

}  // namespace

std::string canonical_dump(const Json& j) {
  std::string out;
  write_canonical(out, j);
  return out;
}

// ---------------------------------------------------------------------------
// Small value types

void to_json(Json& j, const Vec2& v) { j = Json::array({v.u, v.v}); }
void from_json(const Json& j, Vec2& v) {
  expect_array(j, 2, "uv");
  v = {j[0].get<double>(), j[1].get<double>()};
}
void to_json(Json& j, const Vec3& v) { j = Json::array({v.x, v.y, v.z}); }
void from_json(const Json& j, Vec3& v) {
  expect_array(j, 3, "3-vector");
  v = {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}
void to_json(Json& j, const Quat& q) { j = Json::array({q.w, q.x, q.y, q.z}); }
void from_json(const Json& j, Quat& q) {
  expect_array(j, 4, "quaternion");
  q = {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}
void to_json(Json& j, const Rgb& c) { j = Json::array({c.r, c.g, c.b}); }
void from_json(const Json& j, Rgb& c) {
  expect_array(j, 3, "color");
  c = {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}
void to_json(Json& j, const LatLon& p) { j = Json::array({p.lat, p.lon}); }
void from_json(const Json& j, LatLon& p) {
  expect_array(j, 2, "lat/lon pair");
  p = {j[0].get<double>(), j[1].get<double>()};
}

// ---------------------------------------------------------------------------
// Records

void to_json(Json& j, const StudyMeta& m) {
  j = Json{{"title", m.title}, {"conditions", m.conditions}, {"notes", m.notes}};
}
void from_json(const Json& j, StudyMeta& m) {
  m.title = j.at("title").get<std::string>();
  m.conditions = get_or(j, "conditions", std::vector<std::string>{});
  m.notes = get_or(j, "notes", std::string{});
}

void to_json(Json& j, const Participant& p) {
  j = Json{{"id", p.id}, {"color", p.color}, {"demographics", p.demographics}};
}
void from_json(const Json& j, Participant& p) {
  p.id = j.at("id").get<std::string>();
  p.color = j.at("color").get<Rgb>();
  p.demographics = get_or(j, "demographics", AttrMap{});
}

void to_json(Json& j, const SampledStream& s) {
  Json samples = Json::array();
  for (const auto& x : s.samples) samples.push_back(Json::array({x.t, x.value}));
  Json gaps = Json::array();
  for (const auto& g : s.gaps) gaps.push_back(Json::array({g.t_start, g.t_end}));
  j = Json{{"name", s.name},     {"unit", s.unit}, {"rate_hz", s.rate_hz},
           {"samples", samples}, {"gaps", gaps}};
}
void from_json(const Json& j, SampledStream& s) {
  s.name = j.at("name").get<std::string>();
  s.unit = get_or(j, "unit", std::string{});
  s.rate_hz = j.at("rate_hz").get<double>();
  s.samples.clear();
  for (const auto& x : j.at("samples")) {
    expect_array(x, 2, "stream sample");
    if (!x[0].is_number_integer()) throw ParseError("stream sample time must be integer ms");
    s.samples.push_back({x[0].get<Millis>(), x[1].get<double>()});
  }
  s.gaps.clear();
  if (auto it = j.find("gaps"); it != j.end()) {
    for (const auto& g : *it) {
      expect_array(g, 2, "stream gap");
      s.gaps.push_back({g[0].get<Millis>(), g[1].get<Millis>()});
    }
  }
}

void to_json(Json& j, const JointPose& p) {
  j = Json::array({p.position.x, p.position.y, p.position.z, p.rotation.w, p.rotation.x,
                   p.rotation.y, p.rotation.z});
}
void from_json(const Json& j, JointPose& p) {
  expect_array(j, 7, "joint pose");
  p.position = {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
  p.rotation = {j[3].get<double>(), j[4].get<double>(), j[5].get<double>(), j[6].get<double>()};
}

void to_json(Json& j, const SkeletonFrame& f) { j = Json{{"t", f.t}, {"joints", f.joints}}; }
void from_json(const Json& j, SkeletonFrame& f) {
  f.t = get_millis(j, "t");
  f.joints = j.at("joints").get<std::vector<JointPose>>();
}

void to_json(Json& j, const RaySample& r) {
  j = Json{{"t", r.t},
           {"origin", r.origin},
           {"direction", r.direction},
           {"modality", to_string(r.modality)}};
}
void from_json(const Json& j, RaySample& r) {
  r.t = get_millis(j, "t");
  r.origin = j.at("origin").get<Vec3>();
  r.direction = j.at("direction").get<Vec3>();
  r.modality = parse_ray_modality(j.at("modality").get<std::string>());
}

void to_json(Json& j, const SurfaceSample& s) {
  j = Json{{"t", s.t}, {"mesh_id", s.mesh_id}, {"position", s.position}};
}
void from_json(const Json& j, SurfaceSample& s) {
  s.t = get_millis(j, "t");
  s.mesh_id = j.at("mesh_id").get<std::string>();
  s.position = j.at("position").get<Vec3>();
}

void to_json(Json& j, const EventRecord& e) {
  j = Json{{"id", e.id},
           {"kind", to_string(e.kind)},
           {"label", e.label},
           {"t_start", e.t_start},
           {"t_end", e.t_end},
           {"participant_id", e.participant_id},
           {"attrs", e.attrs},
           {"confidence", e.confidence},
           {"source", to_string(e.source)}};
}
void from_json(const Json& j, EventRecord& e) {
  e.id = j.at("id").get<std::string>();
  e.kind = parse_event_kind(j.at("kind").get<std::string>());
  e.label = get_or(j, "label", std::string{});
  e.t_start = get_millis(j, "t_start");
  e.t_end = get_millis(j, "t_end");
  e.participant_id = j.at("participant_id").get<std::string>();
  e.attrs = get_or(j, "attrs", AttrMap{});
  e.confidence = get_or(j, "confidence", 1.0);
  e.source = parse_event_source(get_or(j, "source", std::string("logged")));
}

void to_json(Json& j, const GeoSample& g) {
  j = Json{{"t", g.t}, {"lat", g.lat}, {"lon", g.lon}, {"alt", g.alt}};
  if (g.heading) j["heading"] = *g.heading;
  if (g.speed) j["speed"] = *g.speed;
}
void from_json(const Json& j, GeoSample& g) {
  g.t = get_or<Millis>(j, "t", 0);
  g.lat = j.at("lat").get<double>();
  g.lon = j.at("lon").get<double>();
  g.alt = get_or(j, "alt", 0.0);
  get_opt(j, "heading", g.heading);
  get_opt(j, "speed", g.speed);
}

void to_json(Json& j, const TrackedObjectSample& o) {
  j = Json{{"t", o.t},
           {"object_id", o.object_id},
           {"class", to_string(o.object_class)},
           {"position", o.position}};
}
void from_json(const Json& j, TrackedObjectSample& o) {
  o.t = get_millis(j, "t");
  o.object_id = j.at("object_id").get<std::string>();
  o.object_class = parse_object_class(j.at("class").get<std::string>());
  o.position = j.at("position").get<Vec3>();
}

void to_json(Json& j, const SpeechSegment& s) {
  j = Json{{"t_start", s.t_start}, {"t_end", s.t_end}, {"transcript", s.transcript}};
  if (s.referent) j["referent"] = *s.referent;
}
void from_json(const Json& j, SpeechSegment& s) {
  s.t_start = get_millis(j, "t_start");
  s.t_end = get_millis(j, "t_end");
  s.transcript = get_or(j, "transcript", std::string{});
  get_opt(j, "referent", s.referent);
}

void to_json(Json& j, const MediaRef& m) {
  j = Json{{"path", m.path}, {"kind", to_string(m.kind)}, {"t_offset", m.t_offset}};
}
void from_json(const Json& j, MediaRef& m) {
  m.path = j.at("path").get<std::string>();
  m.kind = parse_media_kind(j.at("kind").get<std::string>());
  m.t_offset = get_or<Millis>(j, "t_offset", 0);
}

void to_json(Json& j, const SessionRecording& s) {
  j = Json{{"participant_id", s.participant_id},
           {"condition", s.condition},
           {"t0", s.t0},
           {"duration", s.duration},
           {"joint_names", s.joint_names},
           {"streams", s.streams},
           {"skeleton", s.skeleton},
           {"gaze", s.gaze},
           {"pointing", s.pointing},
           {"touches", s.touches},
           {"speech", s.speech},
           {"events", s.events},
           {"ego_path", s.ego_path},
           {"road_users", s.road_users},
           {"media", s.media}};
}
void from_json(const Json& j, SessionRecording& s) {
  s.participant_id = j.at("participant_id").get<std::string>();
  s.condition = get_or(j, "condition", std::string{});
  s.t0 = get_or<Millis>(j, "t0", 0);
  s.duration = get_millis(j, "duration");
  s.joint_names = get_or(j, "joint_names", std::vector<std::string>{});
  s.streams = get_or(j, "streams", std::vector<SampledStream>{});
  s.skeleton = get_or(j, "skeleton", std::vector<SkeletonFrame>{});
  s.gaze = get_or(j, "gaze", std::vector<RaySample>{});
  s.pointing = get_or(j, "pointing", std::vector<RaySample>{});
  s.touches = get_or(j, "touches", std::vector<SurfaceSample>{});
  s.speech = get_or(j, "speech", std::vector<SpeechSegment>{});
  s.events = get_or(j, "events", std::vector<EventRecord>{});
  s.ego_path = get_or(j, "ego_path", std::vector<GeoSample>{});
  s.road_users = get_or(j, "road_users", std::vector<TrackedObjectSample>{});
  s.media = get_or(j, "media", std::vector<MediaRef>{});
}

void to_json(Json& j, const BuildingFootprint& f) {
  j = Json{{"id", f.id}, {"name", f.name}, {"polygon", f.polygon}};
  if (f.height) j["height"] = *f.height;
}
void from_json(const Json& j, BuildingFootprint& f) {
  f.id = j.at("id").get<std::string>();
  f.name = get_or(j, "name", std::string{});
  f.polygon = j.at("polygon").get<std::vector<LatLon>>();
  get_opt(j, "height", f.height);
}

void to_json(Json& j, const MeshAsset& m) {
  Json tris = Json::array();
  for (const auto& t : m.triangles) tris.push_back(Json::array({t[0], t[1], t[2]}));
  j = Json{{"id", m.id},
           {"name", m.name},
           {"role", to_string(m.role)},
           {"vertices", m.vertices},
           {"triangles", tris},
           {"uv", m.uv}};
}
void from_json(const Json& j, MeshAsset& m) {
  m.id = j.at("id").get<std::string>();
  m.name = get_or(j, "name", std::string{});
  m.role = parse_mesh_role(j.at("role").get<std::string>());
  m.vertices = j.at("vertices").get<std::vector<Vec3>>();
  m.triangles.clear();
  for (const auto& t : j.at("triangles")) {
    expect_array(t, 3, "triangle");
    for (const auto& idx : t) {
      if (!idx.is_number_integer() || idx.get<std::int64_t>() < 0) {
        throw ParseError("triangle indices must be non-negative integers");
      }
    }
    m.triangles.push_back(
        {t[0].get<std::uint32_t>(), t[1].get<std::uint32_t>(), t[2].get<std::uint32_t>()});
  }
  m.uv = get_or(j, "uv", std::vector<Vec2>{});
}

void to_json(Json& j, const SceneDescription& s) {
  j = Json{{"origin", s.origin},
           {"meshes", s.meshes},
           {"footprints", s.footprints},
           {"ego_vehicle", s.ego_vehicle}};
}
void from_json(const Json& j, SceneDescription& s) {
  s.origin = j.at("origin").get<GeoSample>();
  s.meshes = get_or(j, "meshes", std::vector<MeshAsset>{});
  s.footprints = get_or(j, "footprints", std::vector<BuildingFootprint>{});
  s.ego_vehicle = j.at("ego_vehicle").get<std::string>();
}

void to_json(Json& j, const Annotation& a) {
  j = Json{{"id", a.id},
           {"kind", to_string(a.kind)},
           {"text", a.text},
           {"author", a.author},
           {"created_seq", a.created_seq}};
  if (a.t) j["t"] = *a.t;
  if (a.position) j["position"] = *a.position;
}
void from_json(const Json& j, Annotation& a) {
  a.id = j.at("id").get<std::string>();
  a.kind = parse_annotation_kind(j.at("kind").get<std::string>());
  a.text = get_or(j, "text", std::string{});
  a.author = get_or(j, "author", std::string{});
  a.created_seq = get_or<std::int64_t>(j, "created_seq", 0);
  if (auto it = j.find("t"); it != j.end() && !it->is_null()) {
    if (!it->is_number_integer()) throw ParseError("annotation t must be integer ms");
    a.t = it->get<Millis>();
  } else {
    a.t.reset();
  }
  get_opt(j, "position", a.position);
}

void to_json(Json& j, const ConfigDocument& d) {
  j = Json{{"schema_version", d.schema_version},
           {"study_meta", d.study_meta},
           {"participants", d.participants},
           {"sessions", d.sessions},
           {"scene", d.scene},
           {"annotations", d.annotations}};
}
void from_json(const Json& j, ConfigDocument& d) {
  if (!j.is_object()) throw ParseError("config document must be a JSON object");
  static const std::set<std::string> kTopLevel{"schema_version", "study_meta", "participants",
                                               "sessions",       "scene",      "annotations"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!kTopLevel.count(it.key())) throw ParseError("unexpected top-level key '" + it.key() + "'");
  }
  for (const auto& key : kTopLevel) {
    if (!j.contains(key)) throw ParseError("missing top-level key '" + key + "'");
  }
  d.schema_version = j.at("schema_version").get<std::string>();
  d.study_meta = j.at("study_meta").get<StudyMeta>();
  d.participants = j.at("participants").get<std::vector<Participant>>();
  d.sessions = j.at("sessions").get<std::vector<SessionRecording>>();
  d.scene = j.at("scene").get<SceneDescription>();
  d.annotations = j.at("annotations").get<std::vector<Annotation>>();
}

// ---------------------------------------------------------------------------
// Documents

ConfigDocument parse_document(const Json& j, const std::filesystem::path& base_dir) {
  try {
    Json resolved = j;
    if (auto scene = resolved.find("scene"); scene != resolved.end() && scene->is_object()) {
      if (auto meshes = scene->find("meshes"); meshes != scene->end() && meshes->is_array()) {
        for (auto& m : *meshes) {
          auto obj = m.find("obj");
          if (obj == m.end()) continue;
          const std::filesystem::path rel = obj->get<std::string>();
          if (rel.is_absolute()) throw ParseError("mesh obj path must be relative: " + rel.string());
          MeshAsset mesh = load_obj(base_dir / rel, m.at("id").get<std::string>(),
                                    parse_mesh_role(m.at("role").get<std::string>()));
          mesh.name = get_or(m, "name", std::string{});
          m = Json(mesh);
        }
      }
    }
    return resolved.get<ConfigDocument>();
  } catch (const ParseError&) {
    throw;
  } catch (const Json::exception& e) {
    throw ParseError(std::string("config document: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string("config document: ") + e.what());
  }
}

Json parse_json(std::string_view text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    throw ParseError(what + " is not valid JSON: " + e.what());
  }
}

ConfigDocument parse_document(std::string_view text, const std::filesystem::path& base_dir) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::exception& e) {
    throw ParseError(std::string("config document is not valid JSON: ") + e.what());
  }
  return parse_document(j, base_dir);
}

std::string canonical_serialize(const ConfigDocument& doc) {
  try {
    return canonical_dump(Json(doc)) + "\n";
  } catch (const Json::exception& e) {
    throw ParseError(std::string("config document is not valid UTF-8: ") + e.what());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

ConfigDocument load_document(const std::filesystem::path& path) {
  return parse_document(read_file(path), path.parent_path());
}

void save_document(const ConfigDocument& doc, const std::filesystem::path& path) {
  write_file(path, canonical_serialize(doc));
}

}  // namespace drivelab
