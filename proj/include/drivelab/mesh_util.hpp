#pragma once

#include <string>

#include "drivelab/model.hpp"

namespace drivelab {

/// Axis-aligned box with outward-facing triangles, 24 vertices (per-face UVs
/// packed into a 3x2 atlas).
MeshAsset make_box_mesh(std::string id, MeshRole role, const Vec3& lo, const Vec3& hi);

/// Planar quad spanned by `corner`, `corner + edge_u`, `corner + edge_v`,
/// two triangles, UVs covering [0,1]^2.
MeshAsset make_quad_mesh(std::string id, MeshRole role, const Vec3& corner, const Vec3& edge_u,
                         const Vec3& edge_v);

Aabb mesh_bounds(const MeshAsset& mesh);

}  // namespace drivelab
