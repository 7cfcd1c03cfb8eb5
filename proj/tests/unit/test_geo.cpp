#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "drivelab/geo/buildings.hpp"
#include "drivelab/geo/ego_path.hpp"
#include "drivelab/geo/geodesy.hpp"
#include "drivelab/geo/road_users.hpp"

using namespace drivelab;

namespace {

GeoSample geo(double lat, double lon, double alt = 0.0, Millis t = 0) {
  GeoSample g;
  g.t = t;
  g.lat = lat;
  g.lon = lon;
  g.alt = alt;
  return g;
}

// Vincenty inverse on the WGS-84 ellipsoid, metres.
double vincenty(double lat1, double lon1, double lat2, double lon2) {
  const double a = 6378137.0;
  const double f = 1.0 / 298.257223563;
  const double b = a * (1.0 - f);
  const double d2r = std::numbers::pi / 180.0;
  const double L = (lon2 - lon1) * d2r;
  const double U1 = std::atan((1.0 - f) * std::tan(lat1 * d2r));
  const double U2 = std::atan((1.0 - f) * std::tan(lat2 * d2r));
  const double sinU1 = std::sin(U1), cosU1 = std::cos(U1);
  const double sinU2 = std::sin(U2), cosU2 = std::cos(U2);
  double lambda = L;
  double sin_sigma = 0, cos_sigma = 0, sigma = 0, cos2_alpha = 0, cos2sm = 0;
  for (int i = 0; i < 200; ++i) {
    const double sl = std::sin(lambda), cl = std::cos(lambda);
    sin_sigma = std::sqrt(std::pow(cosU2 * sl, 2) + std::pow(cosU1 * sinU2 - sinU1 * cosU2 * cl, 2));
    if (sin_sigma == 0) return 0.0;
    cos_sigma = sinU1 * sinU2 + cosU1 * cosU2 * cl;
    sigma = std::atan2(sin_sigma, cos_sigma);
    const double sin_alpha = cosU1 * cosU2 * sl / sin_sigma;
    cos2_alpha = 1 - sin_alpha * sin_alpha;
    cos2sm = cos2_alpha != 0 ? cos_sigma - 2 * sinU1 * sinU2 / cos2_alpha : 0;
    const double C = f / 16 * cos2_alpha * (4 + f * (4 - 3 * cos2_alpha));
    const double prev = lambda;
    lambda = L + (1 - C) * f * sin_alpha *
                     (sigma + C * sin_sigma * (cos2sm + C * cos_sigma * (-1 + 2 * cos2sm * cos2sm)));
    if (std::abs(lambda - prev) < 1e-13) break;
  }
  const double u2 = cos2_alpha * (a * a - b * b) / (b * b);
  const double A = 1 + u2 / 16384 * (4096 + u2 * (-768 + u2 * (320 - 175 * u2)));
  const double B = u2 / 1024 * (256 + u2 * (-128 + u2 * (74 - 47 * u2)));
  const double ds = B * sin_sigma *
                    (cos2sm + B / 4 *
                                  (cos_sigma * (-1 + 2 * cos2sm * cos2sm) -
                                   B / 6 * cos2sm * (-3 + 4 * sin_sigma * sin_sigma) * (-3 + 4 * cos2sm * cos2sm)));
  return b * A * (sigma - ds);
}

double mesh_volume(const MeshAsset& m) {
  double v = 0.0;
  for (const auto& t : m.triangles) {
    v += dot(m.vertices[t[0]], cross(m.vertices[t[1]], m.vertices[t[2]])) / 6.0;
  }
  return v;
}

const GeoSample kSf = geo(37.7952, -122.4028, 15.0);

}  // namespace

TEST_CASE("geo_to_local basics") {
  const LocalFrame f = make_local_frame(kSf);
  const Vec3 o = geo_to_local(f, kSf);
  CHECK(norm(o) < 1e-9);

  const LocalFrame eq = make_local_frame(geo(0, 0));
  const Vec3 p = geo_to_local(eq, geo(0, 0.001));
  CHECK(p.x == doctest::Approx(111.32).epsilon(0.1 / 111.32));
  CHECK(std::abs(p.y) < 1e-6);

  CHECK_THROWS_AS(geo_to_local(f, geo(91, 0)), std::invalid_argument);
  CHECK_THROWS_AS(geo_to_local(f, geo(37.0, -190.0)), std::invalid_argument);
  CHECK_THROWS_AS(geo_to_local(f, geo(38.5, -122.4)), std::invalid_argument);
}

TEST_CASE("geo round trip within 10 km") {
  const LocalFrame f = make_local_frame(kSf);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> d(-0.08, 0.08);
  std::uniform_real_distribution<double> h(-50.0, 300.0);
  double max_deg = 0.0;
  double max_m = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const GeoSample p = geo(kSf.lat + d(rng), kSf.lon + d(rng), h(rng));
    const Vec3 l = geo_to_local(f, p);
    const GeoSample back = local_to_geo(f, l);
    max_deg = std::max({max_deg, std::abs(back.lat - p.lat), std::abs(back.lon - p.lon)});
    max_m = std::max(max_m, distance(geo_to_local(f, back), l));
  }
  CHECK(max_deg < 1e-6);
  CHECK(max_m < 1e-6);
}

TEST_CASE("local distances match geodesic distances to first order") {
  const LocalFrame f = make_local_frame(kSf);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> d(-0.02, 0.02);
  std::uniform_real_distribution<double> step(-0.006, 0.006);
  for (int i = 0; i < 300; ++i) {
    const GeoSample a = geo(kSf.lat + d(rng), kSf.lon + d(rng));
    const GeoSample b = geo(a.lat + step(rng), a.lon + step(rng));
    const double g = vincenty(a.lat, a.lon, b.lat, b.lon);
    if (g > 1000.0 || g < 1.0) continue;
    const double l = distance(geo_to_local(f, a), geo_to_local(f, b));
    CHECK(std::abs(l - g) / g < 1e-3);
  }
}

TEST_CASE("ego path arc length") {
  const LocalFrame f = make_local_frame(geo(kSf.lat, kSf.lon));
  auto at = [&](double e, double n, Millis t) {
    GeoSample g = local_to_geo(f, {e, n, 0.0});
    g.t = t;
    return g;
  };

  SUBCASE("straight two points") {
    const EgoPath p = build_ego_path({at(0, 0, 0), at(100, 0, 10000)}, f);
    REQUIRE(p.arc_length.size() == 2);
    CHECK(p.arc_length[0] == 0.0);
    CHECK(p.arc_length[1] == doctest::Approx(100.0).epsilon(1e-9));
    CHECK(p.points[0].heading == doctest::Approx(90.0));
    CHECK(p.points[1].speed == doctest::Approx(10.0));
  }

  SUBCASE("densification leaves length unchanged") {
    std::vector<GeoSample> coarse{at(0, 0, 0), at(300, 400, 50000), at(300, 900, 100000)};
    std::vector<GeoSample> dense;
    for (int k = 0; k <= 100; ++k) {
      const double s = k / 100.0;
      dense.push_back(k <= 50 ? at(600 * s, 800 * s, k * 1000) : at(300, 400 + 1000 * (s - 0.5), k * 1000));
    }
    const double lc = build_ego_path(coarse, f).length();
    const double ld = build_ego_path(dense, f).length();
    CHECK(std::abs(lc - ld) / lc < 1e-9);
  }

  SUBCASE("duplicate timestamps dropped with warning") {
    Report r;
    const EgoPath p = build_ego_path({at(0, 0, 0), at(5, 0, 0), at(10, 0, 1000)}, f, &r);
    CHECK(p.points.size() == 2);
    CHECK(r.warning_count() == 1);
    CHECK(norm(p.points[0].position) < 1e-6);
  }

  CHECK_THROWS_AS(build_ego_path({at(0, 0, 0)}, f), std::invalid_argument);
}

TEST_CASE("interpolate_pose") {
  EgoPath path;
  path.points = {{0, {0, 0, 0}, 350.0, 1.0}, {1000, {10, 0, 0}, 10.0, 1.0}, {2000, {10, 10, 0}, 90.0, 1.0}};
  path.arc_length = {0, 10, 20};
  const EgoPose at = interpolate_pose(path, 1000);
  CHECK(at.position == Vec3{10, 0, 0});
  CHECK(at.heading == 10.0);
  CHECK_FALSE(at.clamped);

  const EgoPose mid = interpolate_pose(path, 500);
  CHECK(mid.position.x == doctest::Approx(5.0));
  const double wrapped = mid.heading > 180.0 ? mid.heading - 360.0 : mid.heading;
  CHECK(wrapped == doctest::Approx(0.0).epsilon(1e-9));

  const EgoPose late = interpolate_pose(path, 5000);
  CHECK(late.clamped);
  CHECK(late.position == Vec3{10, 10, 0});
  CHECK(interpolate_pose(path, -1).clamped);
  CHECK(path.arc_length_at(1500) == doctest::Approx(15.0));
}

TEST_CASE("footprint extrusion") {
  const LocalFrame f = make_local_frame(geo(kSf.lat, kSf.lon));
  auto footprint = [&](const std::vector<Vec2>& ring, std::optional<double> h) {
    BuildingFootprint fp;
    fp.id = "b";
    for (const auto& p : ring) {
      const GeoSample g = local_to_geo(f, {p.u, p.v, 0.0});
      fp.polygon.push_back({g.lat, g.lon});
    }
    fp.height = h;
    return fp;
  };

  SUBCASE("unit square and triangle") {
    const auto sq = extrude_footprints({footprint({{0, 0}, {1, 0}, {1, 1}, {0, 1}}, 10.0)}, f);
    REQUIRE(sq.size() == 1);
    CHECK(sq[0].id == "bldg-b");
    CHECK(sq[0].role == MeshRole::building);
    CHECK(sq[0].triangles.size() == 12);
    CHECK(sq[0].uv.size() == sq[0].vertices.size());
    Vec3 centre{};
    for (const auto& v : sq[0].vertices) centre += v * (1.0 / static_cast<double>(sq[0].vertices.size()));
    for (const auto& t : sq[0].triangles) {
      const Vec3& a = sq[0].vertices[t[0]];
      const Vec3& b = sq[0].vertices[t[1]];
      const Vec3& c = sq[0].vertices[t[2]];
      const Vec3 n = cross(b - a, c - a);
      CHECK(dot(n, (a + b + c) * (1.0 / 3.0) - centre) > 0.0);
      CHECK(triangle_area(a, b, c) > 1e-12);
    }
    CHECK(mesh_volume(sq[0]) == doctest::Approx(10.0).epsilon(1e-6));

    // Clockwise input gets normalised; default height applies.
    const auto tri = extrude_footprints({footprint({{0, 0}, {0, 4}, {3, 0}}, std::nullopt)}, f);
    REQUIRE(tri.size() == 1);
    CHECK(tri[0].triangles.size() == 8);
    CHECK(mesh_volume(tri[0]) == doctest::Approx(6.0 * kDefaultBuildingHeight).epsilon(1e-6));
  }

  SUBCASE("random star polygons keep volume = area x height") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> radius(5.0, 40.0);
    std::uniform_real_distribution<double> jitter(0.0, 1.0);
    std::uniform_real_distribution<double> height(3.0, 80.0);
    std::uniform_int_distribution<int> count(3, 14);
    for (int i = 0; i < 100; ++i) {
      const int n = count(rng);
      std::vector<Vec2> ring;
      for (int k = 0; k < n; ++k) {
        const double ang = 2 * std::numbers::pi * (k + 0.8 * jitter(rng)) / n;
        const double r = radius(rng);
        ring.push_back({100 + r * std::cos(ang), -50 + r * std::sin(ang)});
      }
      const double h = height(rng);
      const auto fp = footprint(ring, h);
      const auto meshes = extrude_footprints({fp}, f);
      REQUIRE(meshes.size() == 1);
      // Shoelace oracle on the local projection of the stored lat/lon ring.
      double area = 0.0;
      for (std::size_t k = 0; k < fp.polygon.size(); ++k) {
        const Vec3 a = geo_to_local(f, fp.polygon[k]);
        const Vec3 b = geo_to_local(f, fp.polygon[(k + 1) % fp.polygon.size()]);
        area += 0.5 * (a.x * b.y - b.x * a.y);
      }
      CHECK(std::abs(mesh_volume(meshes[0]) - std::abs(area) * h) / (std::abs(area) * h) < 1e-6);
      CHECK(meshes[0].triangles.size() == static_cast<std::size_t>(2 * n + 2 * (n - 2)));
    }
  }

  SUBCASE("self-intersecting footprint skipped with warning") {
    Report r;
    const auto out = extrude_footprints({footprint({{0, 0}, {10, 10}, {0, 10}, {10, 0}}, 5.0)}, f, &r);
    CHECK(out.empty());
    CHECK(r.warning_count() == 1);
  }
}

TEST_CASE("ear clipping handles concave and collinear rings") {
  const std::vector<Vec2> l_shape{{0, 0}, {2, 0}, {2, 1}, {1, 1}, {1, 2}, {0, 2}};
  const auto tris = ear_clip(l_shape);
  double area = 0.0;
  for (const auto& t : tris) {
    area += 0.5 * ((l_shape[t[1]].u - l_shape[t[0]].u) * (l_shape[t[2]].v - l_shape[t[0]].v) -
                   (l_shape[t[1]].v - l_shape[t[0]].v) * (l_shape[t[2]].u - l_shape[t[0]].u));
  }
  CHECK(tris.size() == 4);
  CHECK(area == doctest::Approx(3.0));

  const std::vector<Vec2> with_collinear{{0, 0}, {1, 0}, {2, 0}, {2, 2}, {0, 2}};
  double total = 0.0;
  for (const auto& t : ear_clip(with_collinear)) {
    const Vec2 a = with_collinear[t[0]], b = with_collinear[t[1]], c = with_collinear[t[2]];
    const double tri = 0.5 * ((b.u - a.u) * (c.v - a.v) - (b.v - a.v) * (c.u - a.u));
    CHECK(tri > 1e-12);
    total += tri;
  }
  CHECK(total == doctest::Approx(4.0));
}

TEST_CASE("road user placement") {
  using S = TrackedObjectSample;
  const std::vector<S> one{{0, "a", ObjectClass::car, {0, 0, 0}}, {1000, "a", ObjectClass::car, {10, 0, 0}}};
  const auto at = place_road_users(one, 500);
  REQUIRE(at.size() == 1);
  CHECK(at[0].position == Vec3{5, 0, 0});
  CHECK(place_road_users(one, 3001).empty());
  CHECK(place_road_users(one, -2001).empty());
  CHECK(place_road_users(one, 3000).size() == 1);

  // Staggered objects versus a per-object scan oracle.
  std::vector<S> samples;
  const char* ids[] = {"ped", "bike", "car"};
  for (int o = 0; o < 3; ++o) {
    for (int k = 0; k < 10; ++k) {
      const Millis t = o * 4000 + k * 700;
      samples.push_back({t, ids[o], static_cast<ObjectClass>(o), {double(k * k), double(o), double(k)}});
    }
  }
  std::sort(samples.begin(), samples.end(), [](const S& a, const S& b) { return a.t < b.t; });
  for (Millis t = -3000; t < 20000; t += 137) {
    std::vector<PlacedObject> oracle;
    for (const char* id : {"bike", "car", "ped"}) {
      std::vector<S> mine;
      for (const auto& s : samples) {
        if (s.object_id == id) mine.push_back(s);
      }
      bool covered = false;
      for (const auto& s : mine) covered = covered || std::abs(s.t - t) <= 2000;
      if (!covered) continue;
      PlacedObject p{id, mine[0].object_class, {}};
      if (t <= mine.front().t) {
        p.position = mine.front().position;
      } else if (t >= mine.back().t) {
        p.position = mine.back().position;
      } else {
        for (std::size_t k = 0; k + 1 < mine.size(); ++k) {
          if (mine[k].t <= t && t <= mine[k + 1].t) {
            const double a = double(t - mine[k].t) / double(mine[k + 1].t - mine[k].t);
            p.position = mine[k].position + (mine[k + 1].position - mine[k].position) * a;
            break;
          }
        }
      }
      oracle.push_back(p);
    }
    CHECK(place_road_users(samples, t) == oracle);
  }
}
