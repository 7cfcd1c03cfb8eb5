#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "drivelab/json_io.hpp"
#include "drivelab/model.hpp"
#include "drivelab/replay/replay.hpp"

namespace drivelab {

/// Presences older than this are left out of snapshots.
inline constexpr Millis kPresenceTimeout = 10000;

enum class AnalystView { desktop, vr };

struct CameraPose {
  Vec3 position;
  Quat orientation;
  friend bool operator==(const CameraPose&, const CameraPose&) = default;
};

struct AnalystPresence {
  std::string analyst_id;
  std::string display_name;
  AnalystView view = AnalystView::desktop;
  CameraPose pose;
  double h_fov = 60.0;  // degrees
  double v_fov = 40.0;
  Millis last_seen = 0;  // server clock
  friend bool operator==(const AnalystPresence&, const AnalystPresence&) = default;
};

struct GhostBookmark {
  std::string id;
  std::string analyst_id;
  Millis t = 0;
  CameraPose camera;
  std::string label;
  friend bool operator==(const GhostBookmark&, const GhostBookmark&) = default;
};

enum class SyncKind {
  hello,
  snapshot,
  set_playback,
  presence,
  create_annotation,
  update_annotation,
  delete_annotation,
  set_visibility,
  create_ghost,
  select_ghost,
  error
};

const char* to_string(AnalystView v);
AnalystView parse_analyst_view(const std::string& s);
const char* to_string(SyncKind k);
SyncKind parse_sync_kind(const std::string& s);

/// One frame of the sync stream. Client proposals carry seq 0.
struct SyncMessage {
  std::int64_t seq = 0;
  SyncKind kind = SyncKind::hello;
  std::string origin;  // analyst id, or "server"
  Json payload = Json::object();
};

inline constexpr const char* kServerOrigin = "server";

/// Exactly {seq, kind, origin, payload}; anything else is a ParseError.
SyncMessage parse_sync_message(const Json& j);
SyncMessage parse_sync_message(std::string_view text);
std::string encode_sync_message(const SyncMessage& m);  // canonical, no newline

/// Replicated state of one hosted session.
struct SessionState {
  std::int64_t seq = 0;
  Millis duration = 0;
  ReplayState playback;
  std::map<std::string, AnalystPresence> presences;
  std::map<std::string, GhostBookmark> ghosts;
  std::map<std::string, Annotation> annotations;

  friend bool operator==(const SessionState&, const SessionState&) = default;
};

SessionState initial_state(const ConfigDocument& doc);

/// Applies one accepted (server-stamped) message. Deterministic: replaying a
/// ledger onto initial_state reproduces the live state. Throws
/// std::logic_error when seq does not follow state.seq.
void materialize(SessionState& state, const SyncMessage& accepted);

/// Snapshot payload as sent to a joining analyst: presences older than
/// kPresenceTimeout at `now` are omitted.
Json snapshot_payload(const SessionState& state, Millis now);

/// Every field, stale presences included; byte-comparable via canonical_dump.
Json full_state_json(const SessionState& state);

/// Inverse of snapshot_payload.
SessionState state_from_snapshot(const Json& payload);

void to_json(Json& j, const CameraPose& c);
void from_json(const Json& j, CameraPose& c);
void to_json(Json& j, const AnalystPresence& p);
void from_json(const Json& j, AnalystPresence& p);
void to_json(Json& j, const GhostBookmark& g);
void from_json(const Json& j, GhostBookmark& g);

}  // namespace drivelab
