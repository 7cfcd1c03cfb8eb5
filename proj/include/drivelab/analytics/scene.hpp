#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "drivelab/analytics/raycast.hpp"
#include "drivelab/geo/ego_path.hpp"
#include "drivelab/model.hpp"
#include "drivelab/validate.hpp"

namespace drivelab {

/// Meshes of the interior are expressed in the vehicle frame.
bool in_vehicle_frame(MeshRole role);

struct SceneHit {
  std::size_t target = 0;  // index into SceneRaycaster::meshes()
  RayHit hit;              // in the target's own frame
  Vec3 scene_point;        // hit in the scene frame when a pose was given, else vehicle frame
};

/// Ray target set of a scene: interior meshes (vehicle frame) plus building,
/// ground and extruded footprint meshes (scene frame). The ego exterior and
/// road-user templates are not ray targets.
class SceneRaycaster {
 public:
  explicit SceneRaycaster(const SceneDescription& scene, Report* report = nullptr);

  /// Ray given in the vehicle frame. Without a pose only interior meshes are
  /// tested.
  std::optional<SceneHit> cast(const Vec3& origin, const Vec3& direction, const EgoPose* pose,
                               double max_distance) const;

  const std::vector<MeshAsset>& meshes() const { return meshes_; }
  const MeshAsset* find(const std::string& id) const;
  std::optional<std::size_t> index_of(const std::string& id) const;
  bool vehicle_frame(std::size_t target) const { return in_vehicle_frame(meshes_[target].role); }

 private:
  std::vector<MeshAsset> meshes_;
  std::vector<std::unique_ptr<Bvh>> bvh_;
};

/// Every scene mesh plus prism meshes for footprints without a mesh of the
/// same derived id.
std::vector<MeshAsset> scene_meshes_with_buildings(const SceneDescription& scene, Report* report = nullptr);

}  // namespace drivelab
