#include "drivelab/analytics/raycast.hpp"

#include <algorithm>
#include <cmath>

namespace drivelab {

std::optional<RayHit> intersect_triangle(const Vec3& o, const Vec3& d, const Vec3& a, const Vec3& b,
                                         const Vec3& c) {
  const Vec3 e1 = b - a;
  const Vec3 e2 = c - a;
  const Vec3 p = cross(d, e2);
  const double det = dot(e1, p);
  if (std::abs(det) <= 1e-14 * norm(e1) * norm(e2)) return std::nullopt;
  const double inv = 1.0 / det;
  const Vec3 s = o - a;
  const double u = dot(s, p) * inv;
  if (u < 0.0 || u > 1.0) return std::nullopt;
  const Vec3 q = cross(s, e1);
  const double v = dot(d, q) * inv;
  if (v < 0.0 || u + v > 1.0) return std::nullopt;
  const double t = dot(e2, q) * inv;
  if (!(t > 0.0)) return std::nullopt;
  RayHit h;
  h.distance = t;
  h.point = o + d * t;
  h.u = u;
  h.v = v;
  return h;
}

namespace {

bool better(const RayHit& h, std::uint32_t tri, const std::optional<RayHit>& best) {
  return !best || h.distance < best->distance || (h.distance == best->distance && tri < best->triangle);
}

// Slab test; returns entry distance or nullopt.
std::optional<double> hit_box(const Aabb& box, const Vec3& o, const Vec3& inv, double tmax) {
  double t0 = 0.0;
  double t1 = tmax;
  const double lo[3] = {box.lo.x, box.lo.y, box.lo.z};
  const double hi[3] = {box.hi.x, box.hi.y, box.hi.z};
  const double org[3] = {o.x, o.y, o.z};
  const double id[3] = {inv.x, inv.y, inv.z};
  for (int k = 0; k < 3; ++k) {
    double a = (lo[k] - org[k]) * id[k];
    double b = (hi[k] - org[k]) * id[k];
    if (std::isnan(a) || std::isnan(b)) {
      // Ray parallel to the slab and starting on its plane.
      if (org[k] < lo[k] || org[k] > hi[k]) return std::nullopt;
      continue;
    }
    if (a > b) std::swap(a, b);
    t0 = std::max(t0, a);
    t1 = std::min(t1, b);
    if (t0 > t1) return std::nullopt;
  }
  return t0;
}

}  // namespace

Bvh::Bvh(const MeshAsset& mesh) : mesh_(&mesh) {
  const auto n = static_cast<std::uint32_t>(mesh.triangles.size());
  order_.resize(n);
  tri_box_.resize(n);
  centroid_.resize(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    order_[i] = i;
    const auto& t = mesh.triangles[i];
    Aabb b;
    for (int k = 0; k < 3; ++k) b.extend(mesh.vertices[t[k]]);
    tri_box_[i] = b;
    centroid_[i] = b.center();
  }
  if (n > 0) {
    nodes_.reserve(2 * n);
    build(0, n);
  }
}

std::uint32_t Bvh::build(std::uint32_t begin, std::uint32_t end) {
  const auto index = static_cast<std::uint32_t>(nodes_.size());
  nodes_.push_back({});
  Aabb box;
  Aabb cbox;
  for (std::uint32_t i = begin; i < end; ++i) {
    box.extend(tri_box_[order_[i]].lo);
    box.extend(tri_box_[order_[i]].hi);
    cbox.extend(centroid_[order_[i]]);
  }
  nodes_[index].box = box;
  if (end - begin <= 4) {
    nodes_[index].first = begin;
    nodes_[index].count = end - begin;
    return index;
  }
  const Vec3 ext = cbox.hi - cbox.lo;
  const int axis = ext.x >= ext.y && ext.x >= ext.z ? 0 : (ext.y >= ext.z ? 1 : 2);
  auto key = [&](std::uint32_t tri) {
    const Vec3& c = centroid_[tri];
    return axis == 0 ? c.x : (axis == 1 ? c.y : c.z);
  };
  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) {
                     const double ka = key(a);
                     const double kb = key(b);
                     return ka < kb || (ka == kb && a < b);
                   });
  build(begin, mid);
  const std::uint32_t right = build(mid, end);
  nodes_[index].first = right;
  nodes_[index].count = 0;
  return index;
}

std::optional<RayHit> Bvh::intersect(const Vec3& o, const Vec3& d, double max_distance) const {
  std::optional<RayHit> best;
  if (nodes_.empty()) return best;
  const Vec3 inv{1.0 / d.x, 1.0 / d.y, 1.0 / d.z};
  std::vector<std::uint32_t> stack{0};
  stack.reserve(64);
  while (!stack.empty()) {
    const std::uint32_t ni = stack.back();
    stack.pop_back();
    const Node& node = nodes_[ni];
    const double limit = best ? best->distance : max_distance;
    if (!hit_box(node.box, o, inv, limit)) continue;
    if (node.count > 0) {
      for (std::uint32_t k = node.first; k < node.first + node.count; ++k) {
        const std::uint32_t tri = order_[k];
        const auto& t = mesh_->triangles[tri];
        auto h = intersect_triangle(o, d, mesh_->vertices[t[0]], mesh_->vertices[t[1]], mesh_->vertices[t[2]]);
        if (h && h->distance <= max_distance && better(*h, tri, best)) {
          h->triangle = tri;
          best = h;
        }
      }
      continue;
    }
    const std::uint32_t left = ni + 1;
    const std::uint32_t right = node.first;
    const auto dl = hit_box(nodes_[left].box, o, inv, limit);
    const auto dr = hit_box(nodes_[right].box, o, inv, limit);
    // Push the farther child first so the nearer one is visited next.
    if (dl && dr) {
      if (*dl <= *dr) {
        stack.push_back(right);
        stack.push_back(left);
      } else {
        stack.push_back(left);
        stack.push_back(right);
      }
    } else if (dl) {
      stack.push_back(left);
    } else if (dr) {
      stack.push_back(right);
    }
  }
  return best;
}

std::optional<RayHit> raycast(const MeshAsset& mesh, const Vec3& origin, const Vec3& direction) {
  return Bvh(mesh).intersect(origin, direction);
}

std::optional<RayHit> raycast_brute_force(const MeshAsset& mesh, const Vec3& o, const Vec3& d) {
  std::optional<RayHit> best;
  for (std::uint32_t i = 0; i < mesh.triangles.size(); ++i) {
    const auto& t = mesh.triangles[i];
    auto h = intersect_triangle(o, d, mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]);
    if (h && better(*h, i, best)) {
      h->triangle = i;
      best = h;
    }
  }
  return best;
}

}  // namespace drivelab
