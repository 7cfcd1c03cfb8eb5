#include "drivelab/analytics/scene.hpp"

#include "drivelab/geo/buildings.hpp"
#include "drivelab/geo/geodesy.hpp"

namespace drivelab {

bool in_vehicle_frame(MeshRole role) { return role == MeshRole::interior || role == MeshRole::ego_exterior; }

std::vector<MeshAsset> scene_meshes_with_buildings(const SceneDescription& scene, Report* report) {
  std::vector<MeshAsset> out = scene.meshes;
  if (scene.footprints.empty()) return out;
  const LocalFrame frame = make_local_frame(scene.origin);
  for (auto& m : extrude_footprints(scene.footprints, frame, report)) {
    if (!scene.find_mesh(m.id)) out.push_back(std::move(m));
  }
  return out;
}

SceneRaycaster::SceneRaycaster(const SceneDescription& scene, Report* report) {
  for (auto& m : scene_meshes_with_buildings(scene, report)) {
    if (m.role == MeshRole::ego_exterior || m.role == MeshRole::road_user) continue;
    meshes_.push_back(std::move(m));
  }
  bvh_.reserve(meshes_.size());
  for (const auto& m : meshes_) bvh_.push_back(std::make_unique<Bvh>(m));
}

const MeshAsset* SceneRaycaster::find(const std::string& id) const {
  const auto i = index_of(id);
  return i ? &meshes_[*i] : nullptr;
}

std::optional<std::size_t> SceneRaycaster::index_of(const std::string& id) const {
  for (std::size_t i = 0; i < meshes_.size(); ++i) {
    if (meshes_[i].id == id) return i;
  }
  return std::nullopt;
}

std::optional<SceneHit> SceneRaycaster::cast(const Vec3& origin, const Vec3& direction, const EgoPose* pose,
                                             double max_distance) const {
  std::optional<SceneHit> best;
  const Vec3 w_origin = pose ? vehicle_to_world(*pose, origin) : origin;
  const Vec3 w_dir = pose ? vehicle_dir_to_world(*pose, direction) : direction;
  for (std::size_t i = 0; i < meshes_.size(); ++i) {
    const bool local = in_vehicle_frame(meshes_[i].role);
    if (!local && !pose) continue;
    const double limit = best ? best->hit.distance : max_distance;
    const auto h = local ? bvh_[i]->intersect(origin, direction, limit) : bvh_[i]->intersect(w_origin, w_dir, limit);
    if (!h || (best && h->distance >= best->hit.distance)) continue;
    SceneHit s;
    s.target = i;
    s.hit = *h;
    s.scene_point = local && pose ? vehicle_to_world(*pose, h->point) : h->point;
    best = s;
  }
  return best;
}

}  // namespace drivelab
