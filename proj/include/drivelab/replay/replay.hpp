#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "drivelab/geo/ego_path.hpp"
#include "drivelab/geo/road_users.hpp"
#include "drivelab/ingest/stream_ops.hpp"
#include "drivelab/json_io.hpp"
#include "drivelab/model.hpp"

namespace drivelab {

inline constexpr double kMaxPlaybackRate = 8.0;

/// Empty sets admit everything.
struct ReplayFilters {
  std::set<std::string> participants;
  std::set<std::string> conditions;
  std::set<EventKind> kinds;

  bool admits_session(const SessionRecording& s) const;
  bool admits_event(const EventRecord& e) const;
  friend bool operator==(const ReplayFilters&, const ReplayFilters&) = default;
};

struct Visibility {
  bool avatars = true;
  bool trajectories = true;
  bool events = true;
  bool annotations = true;
  std::map<std::string, bool> heatmaps;  // layer id -> shown; absent means shown
  friend bool operator==(const Visibility&, const Visibility&) = default;
};

struct ReplayState {
  Millis t = 0;
  double rate = 1.0;
  bool playing = false;
  ReplayFilters filters;
  Visibility visibility;
  friend bool operator==(const ReplayState&, const ReplayState&) = default;
};

/// Advances a playing state by rate * wall_dt (rounded to whole ms), clamped
/// to [0, duration]. Reaching the boundary in the direction of travel pauses.
ReplayState step(ReplayState state, Millis wall_dt, Millis duration);

/// Jumps to t clamped to [0, duration].
ReplayState seek(ReplayState state, Millis t, Millis duration);

/// Throws std::invalid_argument outside [-8, 8] or for non-finite rates.
ReplayState set_rate(ReplayState state, double rate);

/// Interval index over every event of a document. Queries return events
/// overlapping the closed range [from, to], ordered by (t_start, t_end, id).
class EventIndex {
 public:
  explicit EventIndex(const ConfigDocument& doc);

  std::vector<const EventRecord*> query(Millis from, Millis to, const std::set<EventKind>& kinds = {},
                                        const std::set<std::string>& participants = {}) const;
  /// Also applies the condition filter through each event's session.
  std::vector<const EventRecord*> query(Millis from, Millis to, const ReplayFilters& filters) const;

  std::size_t size() const { return items_.size(); }

 private:
  struct Item {
    const EventRecord* event;
    const SessionRecording* session;
  };
  template <class Pred>
  void collect(std::size_t node, std::size_t lo, std::size_t hi, Millis from, Millis to, const Pred& keep,
               std::vector<const EventRecord*>& out) const;

  std::vector<Item> items_;       // sorted by (t_start, t_end, id)
  std::vector<Millis> max_end_;   // segment tree over items_
};

enum class SkeletonMode { interpolated, nearest };

struct ParticipantPose {
  std::string participant_id;
  std::string condition;
  SkeletonFrame frame;  // frame.t is the snapshot time
};

struct ActiveOutlier {
  std::string participant_id;
  OutlierMark mark;
};

struct SceneSnapshot {
  Millis t = 0;
  std::optional<EgoPose> ego;
  std::string ego_session;  // participant id of the session driving the ego pose
  std::vector<PlacedObject> road_users;
  std::vector<ParticipantPose> participants;
  std::vector<EventRecord> active_events;
  std::vector<ActiveOutlier> outliers;
};

/// Precomputes the per-document structures behind snapshots. Immutable after
/// construction, so any number of threads may call snapshot concurrently.
class ReplayEngine {
 public:
  explicit ReplayEngine(const ConfigDocument& doc, SkeletonMode mode = SkeletonMode::interpolated);

  const ConfigDocument& document() const { return *doc_; }
  const EventIndex& events() const { return index_; }
  Millis duration() const { return duration_; }

  /// Ego pose and road users come from the first admitted session that has an
  /// ego path; skeletons from every admitted session. Outlier marks count as
  /// active within half a sample period of t.
  SceneSnapshot snapshot(const ReplayState& state) const;

  /// Snapshots for many states, computed on `threads` workers, in input order.
  std::vector<SceneSnapshot> snapshots(const std::vector<ReplayState>& states, unsigned threads) const;

 private:
  const ConfigDocument* doc_;
  SkeletonMode mode_;
  Millis duration_ = 0;
  EventIndex index_;
  std::vector<std::optional<EgoPath>> paths_;
  std::vector<std::vector<ActiveOutlier>> outliers_;  // per session, sorted by t
  std::vector<std::vector<Millis>> outlier_window_;   // half sample period per mark
};

/// Convenience wrapper building a ReplayEngine for one call.
SceneSnapshot snapshot(const ConfigDocument& doc, const ReplayState& state);

class AnnotationRejected : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Checks an annotation and places labels on `path` at their t (the given
/// position is kept when path is null). Throws AnnotationRejected.
void prepare_annotation(Annotation& a, Millis duration, const EgoPath* path);

/// Ego path of the first session that has one.
std::optional<EgoPath> reference_path(const ConfigDocument& doc);

/// Upserts by id. Labels need a t inside the timeline and are placed on the
/// ego path of the first session that has one (their given position is kept
/// only when no path exists). Throws AnnotationRejected for an id owned by a
/// different author or an invalid annotation.
ConfigDocument annotate(ConfigDocument doc, Annotation annotation);

/// Removes by id; returns whether it existed.
bool remove_annotation(ConfigDocument& doc, const std::string& id);

void to_json(Json& j, const ReplayFilters& f);
void from_json(const Json& j, ReplayFilters& f);
void to_json(Json& j, const Visibility& v);
void from_json(const Json& j, Visibility& v);
void to_json(Json& j, const ReplayState& s);
void from_json(const Json& j, ReplayState& s);
void to_json(Json& j, const SceneSnapshot& s);

}  // namespace drivelab
