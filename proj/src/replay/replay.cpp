#include "drivelab/replay/replay.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "drivelab/geo/geodesy.hpp"
#include "drivelab/parallel.hpp"
#include "drivelab/skeleton.hpp"

namespace drivelab {

namespace {

std::optional<SkeletonFrame> nearest_frame(const SessionRecording& s, Millis t) {
  if (s.skeleton.empty()) return std::nullopt;
  const auto it = std::lower_bound(s.skeleton.begin(), s.skeleton.end(), t,
                                   [](const SkeletonFrame& f, Millis v) { return f.t < v; });
  const SkeletonFrame* best = it == s.skeleton.end() ? &s.skeleton.back() : &*it;
  if (it != s.skeleton.begin() && (it == s.skeleton.end() || t - (it - 1)->t <= it->t - t)) best = &*(it - 1);
  SkeletonFrame f = *best;
  f.t = t;
  return f;
}

Json pose_json(const EgoPose& p) {
  return {{"position", p.position}, {"heading", p.heading}, {"clamped", p.clamped}};
}

}  // namespace

bool ReplayFilters::admits_session(const SessionRecording& s) const {
  return (participants.empty() || participants.count(s.participant_id)) &&
         (conditions.empty() || conditions.count(s.condition));
}

bool ReplayFilters::admits_event(const EventRecord& e) const {
  return (participants.empty() || participants.count(e.participant_id)) && (kinds.empty() || kinds.count(e.kind));
}

ReplayState step(ReplayState state, Millis wall_dt, Millis duration) {
  if (!state.playing) return state;
  const Millis moved = state.t + static_cast<Millis>(std::llround(state.rate * static_cast<double>(wall_dt)));
  if (moved <= 0) {
    state.t = 0;
    if (state.rate < 0.0) state.playing = false;
  } else if (moved >= duration) {
    state.t = duration;
    if (state.rate > 0.0) state.playing = false;
  } else {
    state.t = moved;
  }
  return state;
}

ReplayState seek(ReplayState state, Millis t, Millis duration) {
  state.t = std::clamp<Millis>(t, 0, std::max<Millis>(0, duration));
  return state;
}

ReplayState set_rate(ReplayState state, double rate) {
  if (!std::isfinite(rate) || std::abs(rate) > kMaxPlaybackRate) {
    throw std::invalid_argument("playback rate must lie in [-8, 8]");
  }
  state.rate = rate;
  return state;
}

EventIndex::EventIndex(const ConfigDocument& doc) {
  for (const auto& s : doc.sessions) {
    for (const auto& e : s.events) items_.push_back({&e, &s});
  }
  std::stable_sort(items_.begin(), items_.end(), [](const Item& a, const Item& b) {
    if (a.event->t_start != b.event->t_start) return a.event->t_start < b.event->t_start;
    if (a.event->t_end != b.event->t_end) return a.event->t_end < b.event->t_end;
    return a.event->id < b.event->id;
  });
  max_end_.assign(4 * std::max<std::size_t>(1, items_.size()), std::numeric_limits<Millis>::min());
  auto build = [&](auto&& self, std::size_t node, std::size_t lo, std::size_t hi) -> Millis {
    if (hi - lo == 1) return max_end_[node] = items_[lo].event->t_end;
    const std::size_t mid = (lo + hi) / 2;
    return max_end_[node] = std::max(self(self, 2 * node + 1, lo, mid), self(self, 2 * node + 2, mid, hi));
  };
  if (!items_.empty()) build(build, 0, 0, items_.size());
}

template <class Pred>
void EventIndex::collect(std::size_t node, std::size_t lo, std::size_t hi, Millis from, Millis to,
                         const Pred& keep, std::vector<const EventRecord*>& out) const {
  if (lo >= hi || max_end_[node] < from || items_[lo].event->t_start > to) return;
  if (hi - lo == 1) {
    if (keep(items_[lo])) out.push_back(items_[lo].event);
    return;
  }
  const std::size_t mid = (lo + hi) / 2;
  collect(2 * node + 1, lo, mid, from, to, keep, out);
  collect(2 * node + 2, mid, hi, from, to, keep, out);
}

std::vector<const EventRecord*> EventIndex::query(Millis from, Millis to, const std::set<EventKind>& kinds,
                                                  const std::set<std::string>& participants) const {
  ReplayFilters f;
  f.kinds = kinds;
  f.participants = participants;
  return query(from, to, f);
}

std::vector<const EventRecord*> EventIndex::query(Millis from, Millis to, const ReplayFilters& filters) const {
  std::vector<const EventRecord*> out;
  if (items_.empty() || to < from) return out;
  collect(0, 0, items_.size(), from, to,
          [&](const Item& it) {
            return filters.admits_event(*it.event) &&
                   (filters.conditions.empty() || filters.conditions.count(it.session->condition));
          },
          out);
  return out;
}

ReplayEngine::ReplayEngine(const ConfigDocument& doc, SkeletonMode mode)
    : doc_(&doc), mode_(mode), duration_(doc.timeline_duration()), index_(doc) {
  const LocalFrame frame = make_local_frame(doc.scene.origin);
  paths_.resize(doc.sessions.size());
  outliers_.resize(doc.sessions.size());
  outlier_window_.resize(doc.sessions.size());
  for (std::size_t i = 0; i < doc.sessions.size(); ++i) {
    const auto& s = doc.sessions[i];
    if (s.ego_path.size() >= 2) paths_[i] = build_ego_path(s.ego_path, frame);
    std::vector<std::pair<ActiveOutlier, Millis>> marks;
    for (const auto& stream : s.streams) {
      const Millis half = static_cast<Millis>(std::llround(500.0 / stream.rate_hz));
      for (auto& m : detect_outliers(stream)) marks.push_back({{s.participant_id, std::move(m)}, half});
    }
    std::stable_sort(marks.begin(), marks.end(), [](const auto& a, const auto& b) {
      if (a.first.mark.t != b.first.mark.t) return a.first.mark.t < b.first.mark.t;
      return a.first.mark.stream_name < b.first.mark.stream_name;
    });
    for (auto& [m, half] : marks) {
      outliers_[i].push_back(std::move(m));
      outlier_window_[i].push_back(half);
    }
  }
}

SceneSnapshot ReplayEngine::snapshot(const ReplayState& state) const {
  SceneSnapshot snap;
  snap.t = state.t;
  const auto& sessions = doc_->sessions;
  for (std::size_t i = 0; i < sessions.size(); ++i) {
    const auto& s = sessions[i];
    if (!state.filters.admits_session(s)) continue;
    if (!snap.ego && paths_[i]) {
      snap.ego = interpolate_pose(*paths_[i], state.t);
      snap.ego_session = s.participant_id;
      snap.road_users = place_road_users(s.road_users, state.t);
    }
    const auto frame = mode_ == SkeletonMode::nearest ? nearest_frame(s, state.t) : sample_skeleton(s, state.t);
    if (frame) {
      ParticipantPose p{s.participant_id, s.condition, *frame};
      p.frame.t = state.t;
      snap.participants.push_back(std::move(p));
    }
    for (std::size_t k = 0; k < outliers_[i].size(); ++k) {
      if (std::llabs(outliers_[i][k].mark.t - state.t) <= outlier_window_[i][k]) snap.outliers.push_back(outliers_[i][k]);
    }
  }
  for (const EventRecord* e : index_.query(state.t, state.t, state.filters)) snap.active_events.push_back(*e);
  return snap;
}

std::vector<SceneSnapshot> ReplayEngine::snapshots(const std::vector<ReplayState>& states, unsigned threads) const {
  std::vector<SceneSnapshot> out(states.size());
  parallel_for(states.size(), threads, [&](std::size_t i) { out[i] = snapshot(states[i]); });
  return out;
}

SceneSnapshot snapshot(const ConfigDocument& doc, const ReplayState& state) {
  return ReplayEngine(doc).snapshot(state);
}

void prepare_annotation(Annotation& a, Millis duration, const EgoPath* path) {
  if (a.id.empty()) throw AnnotationRejected("annotation id is empty");
  if (a.position && !is_finite(*a.position)) throw AnnotationRejected("annotation position is not finite");
  if (a.kind != AnnotationKind::label) return;
  if (!a.t) throw AnnotationRejected("label annotation needs a time");
  if (*a.t < 0 || *a.t > duration) {
    throw AnnotationRejected("label time " + std::to_string(*a.t) + " is outside the recorded sessions");
  }
  if (path) a.position = interpolate_pose(*path, *a.t).position;
  if (!a.position) throw AnnotationRejected("label annotation needs a position when no ego path exists");
}

std::optional<EgoPath> reference_path(const ConfigDocument& doc) {
  const LocalFrame frame = make_local_frame(doc.scene.origin);
  for (const auto& s : doc.sessions) {
    if (s.ego_path.size() >= 2) return build_ego_path(s.ego_path, frame);
  }
  return std::nullopt;
}

ConfigDocument annotate(ConfigDocument doc, Annotation a) {
  auto existing = std::find_if(doc.annotations.begin(), doc.annotations.end(),
                               [&](const Annotation& x) { return x.id == a.id; });
  if (existing != doc.annotations.end() && existing->author != a.author) {
    throw AnnotationRejected("annotation '" + a.id + "' belongs to " + existing->author);
  }
  const auto path = reference_path(doc);
  prepare_annotation(a, doc.timeline_duration(), path ? &*path : nullptr);
  if (existing != doc.annotations.end()) {
    *existing = std::move(a);
  } else {
    doc.annotations.push_back(std::move(a));
  }
  return doc;
}

bool remove_annotation(ConfigDocument& doc, const std::string& id) {
  const auto it = std::find_if(doc.annotations.begin(), doc.annotations.end(),
                               [&](const Annotation& x) { return x.id == id; });
  if (it == doc.annotations.end()) return false;
  doc.annotations.erase(it);
  return true;
}

void to_json(Json& j, const ReplayFilters& f) {
  std::vector<std::string> kinds;
  for (EventKind k : f.kinds) kinds.push_back(to_string(k));
  j = {{"participants", f.participants}, {"conditions", f.conditions}, {"kinds", kinds}};
}

void from_json(const Json& j, ReplayFilters& f) {
  f = {};
  if (j.contains("participants")) f.participants = j["participants"].get<std::set<std::string>>();
  if (j.contains("conditions")) f.conditions = j["conditions"].get<std::set<std::string>>();
  if (j.contains("kinds")) {
    for (const auto& k : j["kinds"]) f.kinds.insert(parse_event_kind(k.get<std::string>()));
  }
}

void to_json(Json& j, const Visibility& v) {
  j = {{"avatars", v.avatars},
       {"trajectories", v.trajectories},
       {"events", v.events},
       {"annotations", v.annotations},
       {"heatmaps", v.heatmaps}};
}

void from_json(const Json& j, Visibility& v) {
  v = {};
  if (j.contains("avatars")) v.avatars = j["avatars"].get<bool>();
  if (j.contains("trajectories")) v.trajectories = j["trajectories"].get<bool>();
  if (j.contains("events")) v.events = j["events"].get<bool>();
  if (j.contains("annotations")) v.annotations = j["annotations"].get<bool>();
  if (j.contains("heatmaps")) v.heatmaps = j["heatmaps"].get<std::map<std::string, bool>>();
}

void to_json(Json& j, const ReplayState& s) {
  j = {{"t", s.t}, {"rate", s.rate}, {"playing", s.playing}, {"filters", s.filters}, {"visibility", s.visibility}};
}

void from_json(const Json& j, ReplayState& s) {
  s = {};
  s.t = j.at("t").get<Millis>();
  s.rate = j.at("rate").get<double>();
  s.playing = j.at("playing").get<bool>();
  if (j.contains("filters")) s.filters = j["filters"].get<ReplayFilters>();
  if (j.contains("visibility")) s.visibility = j["visibility"].get<Visibility>();
}

void to_json(Json& j, const SceneSnapshot& s) {
  Json users = Json::array();
  for (const auto& u : s.road_users) {
    users.push_back({{"object_id", u.object_id}, {"object_class", to_string(u.object_class)}, {"position", u.position}});
  }
  Json people = Json::array();
  for (const auto& p : s.participants) {
    people.push_back({{"participant_id", p.participant_id}, {"condition", p.condition}, {"joints", p.frame.joints}});
  }
  Json outliers = Json::array();
  for (const auto& o : s.outliers) {
    outliers.push_back({{"participant_id", o.participant_id},
                        {"stream", o.mark.stream_name},
                        {"t", o.mark.t},
                        {"value", o.mark.value},
                        {"fence", to_string(o.mark.fence)}});
  }
  j = {{"t", s.t},
       {"ego", s.ego ? pose_json(*s.ego) : Json(nullptr)},
       {"ego_session", s.ego_session},
       {"road_users", users},
       {"participants", people},
       {"active_events", s.active_events},
       {"outliers", outliers}};
}

}  // namespace drivelab
