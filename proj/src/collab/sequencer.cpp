#include "drivelab/collab/sequencer.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace drivelab {

namespace {

// Proposal validation failure; the message goes back to the proposer.
struct Rejection : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <class T>
T field(const Json& p, const char* key) {
  if (!p.contains(key)) throw Rejection(std::string("missing field '") + key + "'");
  try {
    return p[key].get<T>();
  } catch (const std::exception& e) {
    throw Rejection(std::string("bad field '") + key + "': " + e.what());
  }
}

template <class T>
T decode(const Json& p, const char* what) {
  try {
    return p.get<T>();
  } catch (const std::exception& e) {
    throw Rejection(std::string("bad ") + what + ": " + e.what());
  }
}

void check_time(Millis t, Millis duration) {
  if (t < 0 || t > duration) {
    throw Rejection("t " + std::to_string(t) + " outside [0, " + std::to_string(duration) + "]");
  }
}

}  // namespace

Millis system_clock_ms() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

Sequencer::Sequencer(const ConfigDocument& doc, Clock clock)
    : Sequencer(doc, initial_state(doc), std::move(clock)) {}

Sequencer::Sequencer(const ConfigDocument& doc, SessionState state, Clock clock)
    : state_(std::move(state)), clock_(std::move(clock)), path_(reference_path(doc)) {
  if (!clock_) clock_ = system_clock_ms;
}

SyncMessage Sequencer::join(const std::string&) const {
  SyncMessage m;
  m.seq = state_.seq;
  m.kind = SyncKind::snapshot;
  m.origin = kServerOrigin;
  m.payload = snapshot_payload(state_, clock_());
  return m;
}

SyncMessage Sequencer::stamp(SyncKind kind, const std::string& origin, Json payload) const {
  SyncMessage m;
  m.seq = state_.seq + 1;
  m.kind = kind;
  m.origin = origin;
  m.payload = std::move(payload);
  return m;
}

ApplyResult Sequencer::reject(const SyncMessage& proposal, const std::string& reason) const {
  ApplyResult r;
  r.accepted = false;
  r.message.seq = 0;
  r.message.kind = SyncKind::error;
  r.message.origin = kServerOrigin;
  r.message.payload = {{"reason", reason}, {"rejected_kind", to_string(proposal.kind)}, {"to", proposal.origin}};
  return r;
}

Json Sequencer::validated_payload(const SyncMessage& p, SyncKind& kind) {
  const Json& in = p.payload;
  switch (p.kind) {
    case SyncKind::set_playback: {
      ReplayState next = state_.playback;
      if (in.contains("t")) next.t = field<Millis>(in, "t");
      if (in.contains("rate")) next.rate = field<double>(in, "rate");
      if (in.contains("playing")) next.playing = field<bool>(in, "playing");
      check_time(next.t, state_.duration);
      if (!std::isfinite(next.rate) || std::abs(next.rate) > kMaxPlaybackRate) {
        throw Rejection("rate must lie in [-8, 8]");
      }
      return {{"t", next.t}, {"rate", next.rate}, {"playing", next.playing}};
    }
    case SyncKind::presence: {
      Json copy = in;
      copy["analyst_id"] = p.origin;
      AnalystPresence a = decode<AnalystPresence>(copy, "presence");
      if (!is_finite(a.pose.position) || !is_finite(a.pose.orientation) || !std::isfinite(a.h_fov) ||
          !std::isfinite(a.v_fov)) {
        throw Rejection("presence values must be finite");
      }
      a.last_seen = clock_();
      return a;
    }
    case SyncKind::create_annotation:
    case SyncKind::update_annotation: {
      Annotation a = decode<Annotation>(in, "annotation");
      const auto it = state_.annotations.find(a.id);
      if (p.kind == SyncKind::create_annotation) {
        if (it != state_.annotations.end()) throw Rejection("annotation '" + a.id + "' already exists");
        a.author = p.origin;
        a.created_seq = state_.seq + 1;
      } else {
        if (it == state_.annotations.end()) throw Rejection("unknown annotation '" + a.id + "'");
        a.author = it->second.author;
        a.created_seq = it->second.created_seq;
      }
      try {
        prepare_annotation(a, state_.duration, path_ ? &*path_ : nullptr);
      } catch (const AnnotationRejected& e) {
        throw Rejection(e.what());
      }
      return a;
    }
    case SyncKind::delete_annotation: {
      const auto id = field<std::string>(in, "id");
      if (!state_.annotations.count(id)) throw Rejection("unknown annotation '" + id + "'");
      return {{"id", id}};
    }
    case SyncKind::set_visibility: {
      Json merged = state_.playback.visibility;
      for (const auto& [k, v] : in.items()) {
        if (k == "heatmaps") {
          for (const auto& [layer, shown] : v.items()) merged["heatmaps"][layer] = shown;
        } else {
          merged[k] = v;
        }
      }
      return Json(decode<Visibility>(merged, "visibility"));
    }
    case SyncKind::create_ghost: {
      Json copy = in;
      if (!copy.contains("id")) copy["id"] = "ghost-" + std::to_string(state_.seq + 1);
      copy["analyst_id"] = p.origin;
      GhostBookmark g = decode<GhostBookmark>(copy, "ghost");
      if (g.id.empty()) throw Rejection("ghost id is empty");
      if (state_.ghosts.count(g.id)) throw Rejection("ghost '" + g.id + "' already exists");
      check_time(g.t, state_.duration);
      return g;
    }
    case SyncKind::select_ghost: {
      const auto id = field<std::string>(in, "id");
      const auto it = state_.ghosts.find(id);
      if (it == state_.ghosts.end()) throw Rejection("unknown ghost '" + id + "'");
      kind = SyncKind::set_playback;
      return {{"t", it->second.t},
              {"rate", state_.playback.rate},
              {"playing", state_.playback.playing},
              {"ghost", id},
              {"recommended_view", it->second.camera}};
    }
    default:
      throw Rejection(std::string("clients may not send ") + to_string(p.kind));
  }
}

ApplyResult Sequencer::apply(const SyncMessage& proposal) {
  if (proposal.seq != 0) return reject(proposal, "proposals must carry seq 0");
  if (proposal.origin.empty() || proposal.origin == kServerOrigin) return reject(proposal, "invalid origin");
  SyncKind kind = proposal.kind;
  Json payload;
  try {
    payload = validated_payload(proposal, kind);
  } catch (const Rejection& e) {
    return reject(proposal, e.what());
  }
  ApplyResult r;
  r.accepted = true;
  r.message = stamp(kind, proposal.origin, std::move(payload));
  materialize(state_, r.message);
  return r;
}

}  // namespace drivelab
