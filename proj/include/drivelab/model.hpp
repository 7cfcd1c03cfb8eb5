#pragma once

// Domain types of the study config document. All timestamps are
// session-relative integer milliseconds; spatial data uses the vehicle-local
// frame (rear-axle origin, x forward, y left, z up) unless stated otherwise.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "drivelab/geometry.hpp"

namespace drivelab {

using Millis = std::int64_t;
using AttrMap = std::map<std::string, std::string>;

inline constexpr const char* kSchemaVersion = "1.0";

enum class EventKind { interaction, emotion, driving, activity, audio };
enum class EventSource { logged, inferred, manual };
enum class RayModality { gaze, pointing };
enum class ObjectClass { car, pedestrian, cyclist, other };
enum class MeshRole { interior, ego_exterior, building, road_user, ground };
enum class AnnotationKind { label, comment };
enum class MediaKind { video, audio };

struct Rgb {
  double r = 0.0;
  double g = 0.0;
  double b = 0.0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

struct StudyMeta {
  std::string title;
  std::vector<std::string> conditions;
  std::string notes;
  friend bool operator==(const StudyMeta&, const StudyMeta&) = default;
};

struct Participant {
  std::string id;
  Rgb color;
  AttrMap demographics;
  friend bool operator==(const Participant&, const Participant&) = default;
};

struct StreamSample {
  Millis t = 0;
  double value = 0.0;
  friend bool operator==(const StreamSample&, const StreamSample&) = default;
};

/// Explicit hole in a sampled stream; never interpolated across.
struct StreamGap {
  Millis t_start = 0;
  Millis t_end = 0;
  friend bool operator==(const StreamGap&, const StreamGap&) = default;
};

struct SampledStream {
  std::string name;
  std::string unit;
  double rate_hz = 1.0;
  std::vector<StreamSample> samples;
  std::vector<StreamGap> gaps;
  friend bool operator==(const SampledStream&, const SampledStream&) = default;
};

struct JointPose {
  Vec3 position;
  Quat rotation;
  friend bool operator==(const JointPose&, const JointPose&) = default;
};

struct SkeletonFrame {
  Millis t = 0;
  std::vector<JointPose> joints;  // order given by SessionRecording::joint_names
  friend bool operator==(const SkeletonFrame&, const SkeletonFrame&) = default;
};

struct RaySample {
  Millis t = 0;
  Vec3 origin;
  Vec3 direction;
  RayModality modality = RayModality::gaze;
  friend bool operator==(const RaySample&, const RaySample&) = default;
};

struct SurfaceSample {
  Millis t = 0;
  std::string mesh_id;
  Vec3 position;
  friend bool operator==(const SurfaceSample&, const SurfaceSample&) = default;
};

struct EventRecord {
  std::string id;
  EventKind kind = EventKind::interaction;
  std::string label;
  Millis t_start = 0;
  Millis t_end = 0;
  std::string participant_id;
  AttrMap attrs;
  double confidence = 1.0;
  EventSource source = EventSource::logged;
  friend bool operator==(const EventRecord&, const EventRecord&) = default;
};

struct GeoSample {
  Millis t = 0;
  double lat = 0.0;
  double lon = 0.0;
  double alt = 0.0;
  std::optional<double> heading;  // compass degrees, 0 = north, clockwise
  std::optional<double> speed;    // m/s
  friend bool operator==(const GeoSample&, const GeoSample&) = default;
};

struct TrackedObjectSample {
  Millis t = 0;
  std::string object_id;
  ObjectClass object_class = ObjectClass::other;
  Vec3 position;  // scene (east-north-up) frame
  friend bool operator==(const TrackedObjectSample&, const TrackedObjectSample&) = default;
};

struct SpeechSegment {
  Millis t_start = 0;
  Millis t_end = 0;
  std::string transcript;
  std::optional<std::string> referent;
  friend bool operator==(const SpeechSegment&, const SpeechSegment&) = default;
};

struct MediaRef {
  std::string path;
  MediaKind kind = MediaKind::video;
  Millis t_offset = 0;
  friend bool operator==(const MediaRef&, const MediaRef&) = default;
};

struct SessionRecording {
  std::string participant_id;
  std::string condition;
  Millis t0 = 0;  // wall-clock anchor, epoch ms
  Millis duration = 0;
  std::vector<std::string> joint_names;
  std::vector<SampledStream> streams;
  std::vector<SkeletonFrame> skeleton;
  std::vector<RaySample> gaze;
  std::vector<RaySample> pointing;
  std::vector<SurfaceSample> touches;
  std::vector<SpeechSegment> speech;
  std::vector<EventRecord> events;
  std::vector<GeoSample> ego_path;
  std::vector<TrackedObjectSample> road_users;
  std::vector<MediaRef> media;

  const SampledStream* find_stream(const std::string& name) const;
  std::optional<std::size_t> joint_index(const std::string& name) const;

  friend bool operator==(const SessionRecording&, const SessionRecording&) = default;
};

struct LatLon {
  double lat = 0.0;
  double lon = 0.0;
  friend bool operator==(const LatLon&, const LatLon&) = default;
};

struct BuildingFootprint {
  std::string id;
  std::string name;
  std::vector<LatLon> polygon;
  std::optional<double> height;
  friend bool operator==(const BuildingFootprint&, const BuildingFootprint&) = default;
};

using Triangle = std::array<std::uint32_t, 3>;

struct MeshAsset {
  std::string id;
  std::string name;  // human-readable object name, may be empty
  MeshRole role = MeshRole::interior;
  std::vector<Vec3> vertices;
  std::vector<Triangle> triangles;
  std::vector<Vec2> uv;  // empty or one per vertex

  friend bool operator==(const MeshAsset&, const MeshAsset&) = default;
};

struct SceneDescription {
  GeoSample origin;
  std::vector<MeshAsset> meshes;
  std::vector<BuildingFootprint> footprints;
  std::string ego_vehicle;  // mesh id

  const MeshAsset* find_mesh(const std::string& id) const;
  friend bool operator==(const SceneDescription&, const SceneDescription&) = default;
};

struct Annotation {
  std::string id;
  AnnotationKind kind = AnnotationKind::comment;
  std::string text;
  std::optional<Millis> t;
  std::optional<Vec3> position;
  std::string author;
  std::int64_t created_seq = 0;
  friend bool operator==(const Annotation&, const Annotation&) = default;
};

struct ConfigDocument {
  std::string schema_version = kSchemaVersion;
  StudyMeta study_meta;
  std::vector<Participant> participants;
  std::vector<SessionRecording> sessions;
  SceneDescription scene;
  std::vector<Annotation> annotations;

  const Participant* find_participant(const std::string& id) const;
  /// Index of the participant in document order, or the participant count.
  std::size_t participant_rank(const std::string& id) const;
  /// Longest session duration.
  Millis timeline_duration() const;

  friend bool operator==(const ConfigDocument&, const ConfigDocument&) = default;
};

// Closed-set names used on the wire and in files.
const char* to_string(EventKind v);
const char* to_string(EventSource v);
const char* to_string(RayModality v);
const char* to_string(ObjectClass v);
const char* to_string(MeshRole v);
const char* to_string(AnnotationKind v);
const char* to_string(MediaKind v);

// Each throws std::invalid_argument on a name outside the closed set.
EventKind parse_event_kind(const std::string& s);
EventSource parse_event_source(const std::string& s);
RayModality parse_ray_modality(const std::string& s);
ObjectClass parse_object_class(const std::string& s);
MeshRole parse_mesh_role(const std::string& s);
AnnotationKind parse_annotation_kind(const std::string& s);
MediaKind parse_media_kind(const std::string& s);

}  // namespace drivelab
