#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "drivelab/geometry.hpp"
#include "drivelab/model.hpp"

namespace drivelab {

struct RayHit {
  std::uint32_t triangle = 0;
  Vec3 point;
  double distance = 0.0;
  double u = 0.0;  // barycentric weight of vertex 1
  double v = 0.0;  // barycentric weight of vertex 2
};

/// Two-sided Moller-Trumbore test; returns the ray parameter and barycentrics
/// for hits with t > 0.
std::optional<RayHit> intersect_triangle(const Vec3& origin, const Vec3& dir, const Vec3& a,
                                         const Vec3& b, const Vec3& c);

/// Median-split bounding volume hierarchy over one mesh. Nearest-hit queries
/// match an exhaustive scan exactly; equal distances resolve to the lower
/// triangle index.
class Bvh {
 public:
  explicit Bvh(const MeshAsset& mesh);

  std::optional<RayHit> intersect(const Vec3& origin, const Vec3& dir,
                                  double max_distance = std::numeric_limits<double>::infinity()) const;

  const MeshAsset& mesh() const { return *mesh_; }

 private:
  struct Node {
    Aabb box;
    std::uint32_t first = 0;  // leaf: offset into order_; inner: right child index
    std::uint32_t count = 0;  // 0 for inner nodes
  };

  std::uint32_t build(std::uint32_t begin, std::uint32_t end);

  const MeshAsset* mesh_;
  std::vector<Node> nodes_;
  std::vector<std::uint32_t> order_;
  std::vector<Aabb> tri_box_;
  std::vector<Vec3> centroid_;
};

/// Nearest hit of a unit-direction ray against a mesh.
std::optional<RayHit> raycast(const MeshAsset& mesh, const Vec3& origin, const Vec3& direction);

/// Exhaustive per-triangle scan with the same tie rule as Bvh.
std::optional<RayHit> raycast_brute_force(const MeshAsset& mesh, const Vec3& origin, const Vec3& direction);

}  // namespace drivelab
