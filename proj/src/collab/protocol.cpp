#include "drivelab/collab/protocol.hpp"

#include <stdexcept>

namespace drivelab {

namespace {

constexpr const char* kKindNames[] = {"hello",          "snapshot",        "set_playback",      "presence",
                                      "create_annotation", "update_annotation", "delete_annotation", "set_visibility",
                                      "create_ghost",   "select_ghost",    "error"};

template <class Map>
Json values_array(const Map& m) {
  Json out = Json::array();
  for (const auto& [id, v] : m) out.push_back(v);
  return out;
}

}  // namespace

const char* to_string(AnalystView v) { return v == AnalystView::vr ? "vr" : "desktop"; }

AnalystView parse_analyst_view(const std::string& s) {
  if (s == "desktop") return AnalystView::desktop;
  if (s == "vr") return AnalystView::vr;
  throw std::invalid_argument("unknown analyst view '" + s + "'");
}

const char* to_string(SyncKind k) { return kKindNames[static_cast<int>(k)]; }

SyncKind parse_sync_kind(const std::string& s) {
  for (int i = 0; i <= static_cast<int>(SyncKind::error); ++i) {
    if (s == kKindNames[i]) return static_cast<SyncKind>(i);
  }
  throw std::invalid_argument("unknown message kind '" + s + "'");
}

SyncMessage parse_sync_message(const Json& j) {
  if (!j.is_object()) throw ParseError("sync message must be an object");
  if (j.size() != 4 || !j.contains("seq") || !j.contains("kind") || !j.contains("origin") || !j.contains("payload")) {
    throw ParseError("sync message fields must be exactly seq, kind, origin, payload");
  }
  if (!j["seq"].is_number_integer()) throw ParseError("seq must be an integer");
  if (!j["kind"].is_string() || !j["origin"].is_string()) throw ParseError("kind and origin must be strings");
  if (!j["payload"].is_object()) throw ParseError("payload must be an object");
  SyncMessage m;
  m.seq = j["seq"].get<std::int64_t>();
  try {
    m.kind = parse_sync_kind(j["kind"].get<std::string>());
  } catch (const std::invalid_argument& e) {
    throw ParseError(e.what());
  }
  m.origin = j["origin"].get<std::string>();
  m.payload = j["payload"];
  return m;
}

SyncMessage parse_sync_message(std::string_view text) { return parse_sync_message(parse_json(text, "sync message")); }

std::string encode_sync_message(const SyncMessage& m) {
  return canonical_dump(Json{{"seq", m.seq}, {"kind", to_string(m.kind)}, {"origin", m.origin}, {"payload", m.payload}});
}

SessionState initial_state(const ConfigDocument& doc) {
  SessionState s;
  s.duration = doc.timeline_duration();
  for (const auto& a : doc.annotations) s.annotations[a.id] = a;
  return s;
}

void materialize(SessionState& state, const SyncMessage& m) {
  if (m.seq != state.seq + 1) {
    throw std::logic_error("message seq " + std::to_string(m.seq) + " does not follow " + std::to_string(state.seq));
  }
  const Json& p = m.payload;
  switch (m.kind) {
    case SyncKind::set_playback:
      state.playback.t = p.at("t").get<Millis>();
      state.playback.rate = p.at("rate").get<double>();
      state.playback.playing = p.at("playing").get<bool>();
      break;
    case SyncKind::presence: {
      AnalystPresence a = p.get<AnalystPresence>();
      state.presences[a.analyst_id] = std::move(a);
      break;
    }
    case SyncKind::create_annotation:
    case SyncKind::update_annotation: {
      Annotation a = p.get<Annotation>();
      state.annotations[a.id] = std::move(a);
      break;
    }
    case SyncKind::delete_annotation:
      state.annotations.erase(p.at("id").get<std::string>());
      break;
    case SyncKind::set_visibility:
      state.playback.visibility = p.get<Visibility>();
      break;
    case SyncKind::create_ghost: {
      GhostBookmark g = p.get<GhostBookmark>();
      state.ghosts[g.id] = std::move(g);
      break;
    }
    default:
      throw std::logic_error(std::string("message kind ") + to_string(m.kind) + " is never sequenced");
  }
  state.seq = m.seq;
}

Json snapshot_payload(const SessionState& state, Millis now) {
  Json presences = Json::array();
  for (const auto& [id, p] : state.presences) {
    if (now - p.last_seen <= kPresenceTimeout) presences.push_back(p);
  }
  ReplayState shared = state.playback;
  shared.filters = {};
  return {{"seq", state.seq},
          {"duration", state.duration},
          {"playback", shared},
          {"presences", presences},
          {"ghosts", values_array(state.ghosts)},
          {"annotations", values_array(state.annotations)}};
}

Json full_state_json(const SessionState& state) {
  return {{"seq", state.seq},
          {"duration", state.duration},
          {"playback", state.playback},
          {"presences", values_array(state.presences)},
          {"ghosts", values_array(state.ghosts)},
          {"annotations", values_array(state.annotations)}};
}

SessionState state_from_snapshot(const Json& j) {
  SessionState s;
  s.seq = j.at("seq").get<std::int64_t>();
  s.duration = j.at("duration").get<Millis>();
  s.playback = j.at("playback").get<ReplayState>();
  for (const auto& p : j.at("presences")) {
    AnalystPresence a = p.get<AnalystPresence>();
    s.presences[a.analyst_id] = std::move(a);
  }
  for (const auto& g : j.at("ghosts")) {
    GhostBookmark b = g.get<GhostBookmark>();
    s.ghosts[b.id] = std::move(b);
  }
  for (const auto& a : j.at("annotations")) {
    Annotation n = a.get<Annotation>();
    s.annotations[n.id] = std::move(n);
  }
  return s;
}

void to_json(Json& j, const CameraPose& c) { j = {{"position", c.position}, {"orientation", c.orientation}}; }

void from_json(const Json& j, CameraPose& c) {
  c.position = j.at("position").get<Vec3>();
  c.orientation = j.at("orientation").get<Quat>();
}

void to_json(Json& j, const AnalystPresence& p) {
  j = {{"analyst_id", p.analyst_id}, {"display_name", p.display_name}, {"view", to_string(p.view)},
       {"pose", p.pose},             {"frustum", {{"h_fov", p.h_fov}, {"v_fov", p.v_fov}}},
       {"last_seen", p.last_seen}};
}

void from_json(const Json& j, AnalystPresence& p) {
  p.analyst_id = j.at("analyst_id").get<std::string>();
  p.display_name = j.value("display_name", std::string{});
  p.view = parse_analyst_view(j.value("view", std::string("desktop")));
  if (j.contains("pose")) p.pose = j["pose"].get<CameraPose>();
  if (j.contains("frustum")) {
    p.h_fov = j["frustum"].at("h_fov").get<double>();
    p.v_fov = j["frustum"].at("v_fov").get<double>();
  }
  p.last_seen = j.value("last_seen", Millis{0});
}

void to_json(Json& j, const GhostBookmark& g) {
  j = {{"id", g.id}, {"analyst_id", g.analyst_id}, {"t", g.t}, {"camera", g.camera}, {"label", g.label}};
}

void from_json(const Json& j, GhostBookmark& g) {
  g.id = j.at("id").get<std::string>();
  g.analyst_id = j.value("analyst_id", std::string{});
  g.t = j.at("t").get<Millis>();
  if (j.contains("camera")) g.camera = j["camera"].get<CameraPose>();
  g.label = j.value("label", std::string{});
}

}  // namespace drivelab
