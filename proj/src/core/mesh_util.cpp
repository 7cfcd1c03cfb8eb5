#include "drivelab/mesh_util.hpp"

#include <utility>

namespace drivelab {

MeshAsset make_quad_mesh(std::string id, MeshRole role, const Vec3& corner, const Vec3& edge_u,
                         const Vec3& edge_v) {
  MeshAsset m;
  m.id = std::move(id);
  m.role = role;
  m.vertices = {corner, corner + edge_u, corner + edge_u + edge_v, corner + edge_v};
  m.uv = {{0.0, 0.0}, {1.0, 0.0}, {1.0, 1.0}, {0.0, 1.0}};
  m.triangles = {{0, 1, 2}, {0, 2, 3}};
  return m;
}

MeshAsset make_box_mesh(std::string id, MeshRole role, const Vec3& lo, const Vec3& hi) {
  MeshAsset m;
  m.id = std::move(id);
  m.role = role;
  const Vec3 d = hi - lo;
  // Each face: corner plus two edges with edge_u x edge_v pointing outward.
  const std::array<std::array<Vec3, 3>, 6> faces{{
      {lo, Vec3{0, 0, d.z}, Vec3{0, d.y, 0}},                      // -x
      {Vec3{hi.x, lo.y, lo.z}, Vec3{0, d.y, 0}, Vec3{0, 0, d.z}},  // +x
      {lo, Vec3{d.x, 0, 0}, Vec3{0, 0, d.z}},                      // -y
      {Vec3{lo.x, hi.y, lo.z}, Vec3{0, 0, d.z}, Vec3{d.x, 0, 0}},  // +y
      {lo, Vec3{0, d.y, 0}, Vec3{d.x, 0, 0}},                      // -z
      {Vec3{lo.x, lo.y, hi.z}, Vec3{d.x, 0, 0}, Vec3{0, d.y, 0}},  // +z
  }};
  for (std::size_t f = 0; f < faces.size(); ++f) {
    const Vec3 corner = faces[f][0];
    const Vec3 eu = faces[f][1];
    const Vec3 ev = faces[f][2];
    const auto base = static_cast<std::uint32_t>(m.vertices.size());
    m.vertices.insert(m.vertices.end(), {corner, corner + eu, corner + eu + ev, corner + ev});
    const double u0 = static_cast<double>(f % 3) / 3.0;
    const double v0 = static_cast<double>(f / 3) / 2.0;
    const double du = 1.0 / 3.0;
    const double dv = 0.5;
    m.uv.insert(m.uv.end(), {Vec2{u0, v0}, Vec2{u0 + du, v0}, Vec2{u0 + du, v0 + dv}, Vec2{u0, v0 + dv}});
    m.triangles.push_back({base, base + 1, base + 2});
    m.triangles.push_back({base, base + 2, base + 3});
  }
  return m;
}

Aabb mesh_bounds(const MeshAsset& mesh) {
  Aabb b;
  for (const auto& v : mesh.vertices) b.extend(v);
  return b;
}

}  // namespace drivelab
