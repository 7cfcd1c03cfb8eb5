#include "drivelab/model.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>
#include <string_view>
#include <utility>

namespace drivelab {

namespace {

template <typename E, std::size_t N>
E parse_enum(const std::array<std::pair<std::string_view, E>, N>& table, const std::string& s,
             const char* what) {
  for (const auto& [name, value] : table) {
    if (name == s) return value;
  }
  throw std::invalid_argument(std::string("unknown ") + what + " '" + s + "'");
}

template <typename E, std::size_t N>
const char* enum_name(const std::array<std::pair<std::string_view, E>, N>& table, E v) {
  for (const auto& [name, value] : table) {
    if (value == v) return name.data();
  }
  return "?";
}

constexpr std::array<std::pair<std::string_view, EventKind>, 5> kEventKinds{{
    {"interaction", EventKind::interaction},
    {"emotion", EventKind::emotion},
    {"driving", EventKind::driving},
    {"activity", EventKind::activity},
    {"audio", EventKind::audio},
}};
constexpr std::array<std::pair<std::string_view, EventSource>, 3> kEventSources{{
    {"logged", EventSource::logged},
    {"inferred", EventSource::inferred},
    {"manual", EventSource::manual},
}};
constexpr std::array<std::pair<std::string_view, RayModality>, 2> kRayModalities{{
    {"gaze", RayModality::gaze},
    {"pointing", RayModality::pointing},
}};
constexpr std::array<std::pair<std::string_view, ObjectClass>, 4> kObjectClasses{{
    {"car", ObjectClass::car},
    {"pedestrian", ObjectClass::pedestrian},
    {"cyclist", ObjectClass::cyclist},
    {"other", ObjectClass::other},
}};
constexpr std::array<std::pair<std::string_view, MeshRole>, 5> kMeshRoles{{
    {"interior", MeshRole::interior},
    {"ego_exterior", MeshRole::ego_exterior},
    {"building", MeshRole::building},
    {"road_user", MeshRole::road_user},
    {"ground", MeshRole::ground},
}};
constexpr std::array<std::pair<std::string_view, AnnotationKind>, 2> kAnnotationKinds{{
    {"label", AnnotationKind::label},
    {"comment", AnnotationKind::comment},
}};
constexpr std::array<std::pair<std::string_view, MediaKind>, 2> kMediaKinds{{
    {"video", MediaKind::video},
    {"audio", MediaKind::audio},
}};

}  // namespace

const char* to_string(EventKind v) { return enum_name(kEventKinds, v); }
const char* to_string(EventSource v) { return enum_name(kEventSources, v); }
const char* to_string(RayModality v) { return enum_name(kRayModalities, v); }
const char* to_string(ObjectClass v) { return enum_name(kObjectClasses, v); }
const char* to_string(MeshRole v) { return enum_name(kMeshRoles, v); }
const char* to_string(AnnotationKind v) { return enum_name(kAnnotationKinds, v); }
const char* to_string(MediaKind v) { return enum_name(kMediaKinds, v); }

EventKind parse_event_kind(const std::string& s) { return parse_enum(kEventKinds, s, "event kind"); }
EventSource parse_event_source(const std::string& s) {
  return parse_enum(kEventSources, s, "event source");
}
RayModality parse_ray_modality(const std::string& s) {
  return parse_enum(kRayModalities, s, "ray modality");
}
ObjectClass parse_object_class(const std::string& s) {
  return parse_enum(kObjectClasses, s, "object class");
}
MeshRole parse_mesh_role(const std::string& s) { return parse_enum(kMeshRoles, s, "mesh role"); }
AnnotationKind parse_annotation_kind(const std::string& s) {
  return parse_enum(kAnnotationKinds, s, "annotation kind");
}
MediaKind parse_media_kind(const std::string& s) { return parse_enum(kMediaKinds, s, "media kind"); }

const SampledStream* SessionRecording::find_stream(const std::string& name) const {
  auto it = std::find_if(streams.begin(), streams.end(),
                         [&](const SampledStream& s) { return s.name == name; });
  return it == streams.end() ? nullptr : &*it;
}

std::optional<std::size_t> SessionRecording::joint_index(const std::string& name) const {
  auto it = std::find(joint_names.begin(), joint_names.end(), name);
  if (it == joint_names.end()) return std::nullopt;
  return static_cast<std::size_t>(it - joint_names.begin());
}

const MeshAsset* SceneDescription::find_mesh(const std::string& id) const {
  auto it = std::find_if(meshes.begin(), meshes.end(),
                         [&](const MeshAsset& m) { return m.id == id; });
  return it == meshes.end() ? nullptr : &*it;
}

const Participant* ConfigDocument::find_participant(const std::string& id) const {
  auto it = std::find_if(participants.begin(), participants.end(),
                         [&](const Participant& p) { return p.id == id; });
  return it == participants.end() ? nullptr : &*it;
}

std::size_t ConfigDocument::participant_rank(const std::string& id) const {
  auto it = std::find_if(participants.begin(), participants.end(),
                         [&](const Participant& p) { return p.id == id; });
  return static_cast<std::size_t>(it - participants.begin());
}

Millis ConfigDocument::timeline_duration() const {
  Millis d = 0;
  for (const auto& s : sessions) d = std::max(d, s.duration);
  return d;
}

}  // namespace drivelab
