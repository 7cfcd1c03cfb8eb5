#pragma once

#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "drivelab/model.hpp"
#include "drivelab/validate.hpp"

namespace drivelab {

using DetectorParams = std::map<std::string, std::string>;

/// Read access to one session, limited to what a detector declared.
/// Requirement names: "stream:<name>", "speech", "skeleton", "gaze",
/// "pointing", "touches", "ego_path". Reading anything undeclared throws
/// std::logic_error.
class DetectorInput {
 public:
  DetectorInput(const SessionRecording& session, std::set<std::string> granted);

  const std::string& participant_id() const { return session_.participant_id; }
  Millis duration() const { return session_.duration; }

  const SampledStream& stream(const std::string& name) const;
  const std::vector<SpeechSegment>& speech() const;
  const std::vector<SkeletonFrame>& skeleton() const;
  const std::vector<std::string>& joint_names() const;
  const std::vector<RaySample>& gaze() const;
  const std::vector<RaySample>& pointing() const;
  const std::vector<SurfaceSample>& touches() const;
  const std::vector<GeoSample>& ego_path() const;

  /// True when the session can satisfy the requirement.
  static bool available(const SessionRecording& session, const std::string& requirement);

 private:
  void require(const std::string& name) const;

  const SessionRecording& session_;
  std::set<std::string> granted_;
};

/// Detector output before ids are assigned.
struct Detection {
  EventKind kind = EventKind::emotion;
  std::string label;
  Millis t_start = 0;
  Millis t_end = 0;
  double confidence = 1.0;
  AttrMap attrs;
};

class Detector {
 public:
  virtual ~Detector() = default;
  virtual std::string name() const = 0;
  virtual std::set<std::string> requirements() const = 0;
  virtual std::vector<Detection> detect(const DetectorInput& in) const = 0;
};

/// Sustained elevation of a stream: value > mean + k * stddev (population)
/// for at least min_duration_ms. Params: stream (eda), k (2),
/// min_duration_ms (3000), label (stress).
std::unique_ptr<Detector> make_threshold_detector(const DetectorParams& params = {});

/// PERCLOS-style drowsiness: share of samples with closure >= closed_level
/// (0.8) over a trailing window_ms (60000) exceeds ratio (0.7). Params:
/// stream (eye_closure), window_ms, ratio, closed_level, label (drowsiness).
std::unique_ptr<Detector> make_eye_closure_detector(const DetectorParams& params = {});

/// One audio event per speech segment; transcript and referent go to attrs.
std::unique_ptr<Detector> make_speech_activity_detector(const DetectorParams& params = {});

/// Built-in detector by name: "threshold", "eye_closure", "speech_activity".
/// Throws std::invalid_argument for unknown names or bad parameters.
std::unique_ptr<Detector> make_detector(const std::string& name, const DetectorParams& params);

/// Appends inferred events (ids "<detector>-<participant>-<n>") to every
/// session. Detectors whose requirements a session cannot meet are skipped
/// there with a warning. Events are stably re-sorted by t_start.
ConfigDocument run_detectors(ConfigDocument doc, const std::vector<const Detector*>& detectors,
                             Report* report = nullptr);

/// Stable sort by t_start, keeping the relative order of equal starts.
void sort_events(std::vector<EventRecord>& events);

/// `base`, or `base` with a numeric suffix, not yet used in `events`.
std::string unique_event_id(const std::vector<EventRecord>& events, const std::string& base);

}  // namespace drivelab
