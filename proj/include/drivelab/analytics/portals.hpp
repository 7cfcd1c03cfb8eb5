#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "drivelab/analytics/scene.hpp"
#include "drivelab/geo/ego_path.hpp"
#include "drivelab/json_io.hpp"
#include "drivelab/model.hpp"
#include "drivelab/validate.hpp"

namespace drivelab {

enum class PortalMode { direct, indirect };

const char* to_string(PortalMode m);

inline constexpr double kPortalOffset = 2.0;         // metres along the ray
inline constexpr double kPortalMaxDistance = 500.0;  // ray range
inline constexpr double kSpeechAnchorSide = 0.5;     // metres left of the head

struct PlaceRecord {
  std::string name;
  double lat = 0.0;
  double lon = 0.0;
  friend bool operator==(const PlaceRecord&, const PlaceRecord&) = default;
};

/// Place lookup used for indirect portals. A live geocoder can implement the
/// same interface.
class PlaceIndex {
 public:
  virtual ~PlaceIndex() = default;
  virtual std::optional<PlaceRecord> lookup(const std::string& query) const = 0;
};

/// Lookup against a fixed list: case-insensitive exact name first, then equal
/// normalised token strings. The first listed match wins.
class OfflineGazetteer : public PlaceIndex {
 public:
  OfflineGazetteer() = default;
  explicit OfflineGazetteer(std::vector<PlaceRecord> places) : places_(std::move(places)) {}

  /// JSON array of {name, lat, lon}. Throws ParseError.
  static OfflineGazetteer parse(const Json& j);
  static OfflineGazetteer load(const std::filesystem::path& path);

  std::optional<PlaceRecord> lookup(const std::string& query) const override;
  const std::vector<PlaceRecord>& places() const { return places_; }

 private:
  std::vector<PlaceRecord> places_;
};

/// Lower-cased alphanumeric tokens without the articles the/a/an, joined by
/// single spaces.
std::string normalize_name(const std::string& s);

struct PortalCamera {
  Vec3 position;
  Vec3 look_at;
};

struct PortalResolution {
  std::string event_id;
  PortalMode mode = PortalMode::direct;
  std::string modality;
  std::string frame = "scene";  // frame of anchor, hit point and camera: "scene" or "vehicle"
  Vec3 anchor;
  bool resolved = false;
  // direct
  std::string target;
  std::optional<Vec3> hit_point;
  std::optional<PortalCamera> camera;
  // indirect
  std::string query;
  std::optional<PlaceRecord> place;
};

/// Portal of one interaction event whose attrs carry modality gaze, pointing
/// or speech. `path` may be null, in which case only interior targets are
/// reachable and results are in the vehicle frame. Throws
/// std::invalid_argument for other events.
PortalResolution resolve_portal(const EventRecord& event, const SessionRecording& session,
                                const SceneRaycaster& scene, const EgoPath* path, const PlaceIndex* places);

/// Every eligible interaction event of the document, in session then event
/// order.
std::vector<PortalResolution> resolve_portals(const ConfigDocument& doc, const PlaceIndex* places,
                                              Report* report = nullptr);

void to_json(Json& j, const PlaceRecord& p);
void to_json(Json& j, const PortalResolution& r);

}  // namespace drivelab
