#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

#include <json.hpp>

#include "drivelab/model.hpp"

namespace drivelab {

using Json = nlohmann::json;

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a numeric field is NaN or infinite at serialization time.
class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shortest decimal text that parses back to exactly `v` (finite only).
std::string format_double(double v);

/// Deterministic JSON text: keys sorted bytewise, no whitespace, shortest
/// round-trip numbers, UTF-8. No trailing newline.
std::string canonical_dump(const Json& j);

void to_json(Json& j, const Vec2& v);
void from_json(const Json& j, Vec2& v);
void to_json(Json& j, const Vec3& v);
void from_json(const Json& j, Vec3& v);
void to_json(Json& j, const Quat& q);
void from_json(const Json& j, Quat& q);
void to_json(Json& j, const Rgb& c);
void from_json(const Json& j, Rgb& c);
void to_json(Json& j, const StudyMeta& m);
void from_json(const Json& j, StudyMeta& m);
void to_json(Json& j, const Participant& p);
void from_json(const Json& j, Participant& p);
void to_json(Json& j, const SampledStream& s);
void from_json(const Json& j, SampledStream& s);
void to_json(Json& j, const JointPose& p);
void from_json(const Json& j, JointPose& p);
void to_json(Json& j, const SkeletonFrame& f);
void from_json(const Json& j, SkeletonFrame& f);
void to_json(Json& j, const RaySample& r);
void from_json(const Json& j, RaySample& r);
void to_json(Json& j, const SurfaceSample& s);
void from_json(const Json& j, SurfaceSample& s);
void to_json(Json& j, const EventRecord& e);
void from_json(const Json& j, EventRecord& e);
void to_json(Json& j, const GeoSample& g);
void from_json(const Json& j, GeoSample& g);
void to_json(Json& j, const TrackedObjectSample& o);
void from_json(const Json& j, TrackedObjectSample& o);
void to_json(Json& j, const SpeechSegment& s);
void from_json(const Json& j, SpeechSegment& s);
void to_json(Json& j, const MediaRef& m);
void from_json(const Json& j, MediaRef& m);
void to_json(Json& j, const SessionRecording& s);
void from_json(const Json& j, SessionRecording& s);
void to_json(Json& j, const LatLon& p);
void from_json(const Json& j, LatLon& p);
void to_json(Json& j, const BuildingFootprint& f);
void from_json(const Json& j, BuildingFootprint& f);
void to_json(Json& j, const MeshAsset& m);
void from_json(const Json& j, MeshAsset& m);
void to_json(Json& j, const SceneDescription& s);
void from_json(const Json& j, SceneDescription& s);
void to_json(Json& j, const Annotation& a);
void from_json(const Json& j, Annotation& a);
void to_json(Json& j, const ConfigDocument& d);
void from_json(const Json& j, ConfigDocument& d);

/// Parses a config document. Meshes given as {"obj": "relative.obj", ...}
/// are loaded relative to `base_dir` and inlined.
ConfigDocument parse_document(std::string_view text,
                              const std::filesystem::path& base_dir = {});
ConfigDocument parse_document(const Json& j, const std::filesystem::path& base_dir = {});
inline ConfigDocument parse_document(const std::string& text,
                                     const std::filesystem::path& base_dir = {}) {
  return parse_document(std::string_view(text), base_dir);
}
inline ConfigDocument parse_document(const char* text, const std::filesystem::path& base_dir = {}) {
  return parse_document(std::string_view(text), base_dir);
}

/// Canonical, newline-terminated UTF-8 bytes. Throws NonFiniteError.
std::string canonical_serialize(const ConfigDocument& doc);

ConfigDocument load_document(const std::filesystem::path& path);
void save_document(const ConfigDocument& doc, const std::filesystem::path& path);

/// Parses JSON text; syntax errors become ParseError prefixed with `what`.
Json parse_json(std::string_view text, const std::string& what = "json");

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace drivelab
