#include "drivelab/geo/buildings.hpp"

#include <algorithm>
#include <cmath>
#include <list>
#include <string>

namespace drivelab {

namespace {

double cross2(const Vec2& o, const Vec2& a, const Vec2& b) {
  return (a.u - o.u) * (b.v - o.v) - (a.v - o.v) * (b.u - o.u);
}

bool in_triangle(const Vec2& p, const Vec2& a, const Vec2& b, const Vec2& c) {
  return cross2(a, b, p) >= 0.0 && cross2(b, c, p) >= 0.0 && cross2(c, a, p) >= 0.0;
}

}  // namespace

double signed_area(const std::vector<Vec2>& ring) {
  double s = 0.0;
  for (std::size_t i = 0; i < ring.size(); ++i) {
    const Vec2& a = ring[i];
    const Vec2& b = ring[(i + 1) % ring.size()];
    s += a.u * b.v - b.u * a.v;
  }
  return 0.5 * s;
}

std::vector<Triangle> ear_clip(const std::vector<Vec2>& ring) {
  std::vector<Triangle> out;
  if (ring.size() < 3) return out;
  std::vector<std::uint32_t> idx(ring.size());
  for (std::size_t i = 0; i < ring.size(); ++i) idx[i] = static_cast<std::uint32_t>(i);
  if (signed_area(ring) < 0.0) std::reverse(idx.begin(), idx.end());

  double scale = 0.0;
  for (const auto& p : ring) scale = std::max({scale, std::abs(p.u), std::abs(p.v)});
  const double eps = 1e-12 * std::max(1.0, scale * scale);

  while (idx.size() > 3) {
    const std::size_t n = idx.size();
    bool clipped = false;
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint32_t ia = idx[(i + n - 1) % n];
      const std::uint32_t ib = idx[i];
      const std::uint32_t ic = idx[(i + 1) % n];
      const double c = cross2(ring[ia], ring[ib], ring[ic]);
      if (std::abs(c) <= eps) {
        idx.erase(idx.begin() + static_cast<std::ptrdiff_t>(i));
        clipped = true;
        break;
      }
      if (c < 0.0) continue;
      bool ear = true;
      for (std::size_t k = 0; k < n && ear; ++k) {
        const std::uint32_t iv = idx[k];
        if (iv == ia || iv == ib || iv == ic) continue;
        if (ring[iv] == ring[ia] || ring[iv] == ring[ib] || ring[iv] == ring[ic]) continue;
        ear = !in_triangle(ring[iv], ring[ia], ring[ib], ring[ic]);
      }
      if (!ear) continue;
      out.push_back({ia, ib, ic});
      idx.erase(idx.begin() + static_cast<std::ptrdiff_t>(i));
      clipped = true;
      break;
    }
    if (!clipped) {
      // Numerically stuck; fan the remainder.
      for (std::size_t k = 1; k + 1 < idx.size(); ++k) out.push_back({idx[0], idx[k], idx[k + 1]});
      return out;
    }
  }
  if (std::abs(cross2(ring[idx[0]], ring[idx[1]], ring[idx[2]])) > eps) {
    out.push_back({idx[0], idx[1], idx[2]});
  }
  return out;
}

std::string building_mesh_id(const std::string& footprint_id) { return "bldg-" + footprint_id; }

std::vector<MeshAsset> extrude_footprints(const std::vector<BuildingFootprint>& footprints,
                                          const LocalFrame& frame, Report* report) {
  std::vector<MeshAsset> meshes;
  for (std::size_t f = 0; f < footprints.size(); ++f) {
    const auto& fp = footprints[f];
    const std::string path = "scene.footprints[" + std::to_string(f) + "]";
    std::vector<LatLon> poly = fp.polygon;
    if (poly.size() > 1 && poly.front() == poly.back()) poly.pop_back();

    std::vector<Vec2> ring;
    std::vector<Vec2> ll_ring;
    double base = 0.0;
    try {
      for (std::size_t i = 0; i < poly.size(); ++i) {
        const Vec3 p = geo_to_local(frame, poly[i]);
        ring.push_back({p.x, p.y});
        ll_ring.push_back({poly[i].lon, poly[i].lat});
        base = i == 0 ? p.z : std::min(base, p.z);
      }
    } catch (const std::invalid_argument& e) {
      if (report) report->warning(path, std::string("footprint skipped: ") + e.what());
      continue;
    }
    if (!is_simple_polygon(ll_ring) || !is_simple_polygon(ring) ||
        std::abs(signed_area(ring)) < kMinTriangleArea) {
      if (report) report->warning(path, "footprint skipped: polygon is not simple");
      continue;
    }
    if (signed_area(ring) < 0.0) std::reverse(ring.begin(), ring.end());

    const double height = fp.height.value_or(kDefaultBuildingHeight);
    const double top = base + height;
    const std::size_t n = ring.size();

    MeshAsset m;
    m.id = building_mesh_id(fp.id);
    m.name = fp.name;
    m.role = MeshRole::building;

    // Walls: separate vertices per edge so each wall has its own UV strip.
    double perimeter = 0.0;
    std::vector<double> cumulative(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2& a = ring[i];
      const Vec2& b = ring[(i + 1) % n];
      perimeter += std::hypot(b.u - a.u, b.v - a.v);
      cumulative[i + 1] = perimeter;
    }
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2& a = ring[i];
      const Vec2& b = ring[(i + 1) % n];
      const double u0 = cumulative[i] / perimeter;
      const double u1 = cumulative[i + 1] / perimeter;
      const auto v0 = static_cast<std::uint32_t>(m.vertices.size());
      m.vertices.push_back({a.u, a.v, base});
      m.vertices.push_back({b.u, b.v, base});
      m.vertices.push_back({b.u, b.v, top});
      m.vertices.push_back({a.u, a.v, top});
      m.uv.push_back({u0, 0.0});
      m.uv.push_back({u1, 0.0});
      m.uv.push_back({u1, 0.5});
      m.uv.push_back({u0, 0.5});
      m.triangles.push_back({v0, v0 + 1, v0 + 2});
      m.triangles.push_back({v0, v0 + 2, v0 + 3});
    }

    // Caps share a square-aspect planar projection into their atlas cells.
    double min_x = ring[0].u, max_x = ring[0].u, min_y = ring[0].v, max_y = ring[0].v;
    for (const auto& p : ring) {
      min_x = std::min(min_x, p.u);
      max_x = std::max(max_x, p.u);
      min_y = std::min(min_y, p.v);
      max_y = std::max(max_y, p.v);
    }
    const double extent = std::max(max_x - min_x, max_y - min_y);
    const auto cap_tris = ear_clip(ring);
    for (int cap = 0; cap < 2; ++cap) {
      const auto first = static_cast<std::uint32_t>(m.vertices.size());
      const double z = cap == 0 ? top : base;
      const double u_off = cap == 0 ? 0.0 : 0.5;
      for (const auto& p : ring) {
        m.vertices.push_back({p.u, p.v, z});
        m.uv.push_back({u_off + 0.5 * (p.u - min_x) / extent, 0.5 + 0.5 * (p.v - min_y) / extent});
      }
      for (const auto& t : cap_tris) {
        if (cap == 0) {
          m.triangles.push_back({first + t[0], first + t[1], first + t[2]});
        } else {
          m.triangles.push_back({first + t[0], first + t[2], first + t[1]});
        }
      }
    }
    meshes.push_back(std::move(m));
  }
  return meshes;
}

}  // namespace drivelab
