#include "drivelab/geo/geodesy.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace drivelab {

namespace {

constexpr double kE2 = kWgs84F * (2.0 - kWgs84F);
constexpr double kDeg = std::numbers::pi / 180.0;

void check_range(double lat, double lon) {
  if (!std::isfinite(lat) || lat < -90.0 || lat > 90.0) {
    throw std::invalid_argument("latitude out of range: " + std::to_string(lat));
  }
  if (!std::isfinite(lon) || lon < -180.0 || lon > 180.0) {
    throw std::invalid_argument("longitude out of range: " + std::to_string(lon));
  }
}

}  // namespace

Vec3 geodetic_to_ecef(double lat_deg, double lon_deg, double alt_m) {
  const double phi = lat_deg * kDeg;
  const double lam = lon_deg * kDeg;
  const double s = std::sin(phi);
  const double n = kWgs84A / std::sqrt(1.0 - kE2 * s * s);
  return {(n + alt_m) * std::cos(phi) * std::cos(lam), (n + alt_m) * std::cos(phi) * std::sin(lam),
          (n * (1.0 - kE2) + alt_m) * s};
}

GeoSample ecef_to_geodetic(const Vec3& e) {
  const double p = std::hypot(e.x, e.y);
  const double lam = std::atan2(e.y, e.x);
  double phi = std::atan2(e.z, p * (1.0 - kE2));
  double h = 0.0;
  for (int iter = 0; iter < 30; ++iter) {
    const double s = std::sin(phi);
    const double n = kWgs84A / std::sqrt(1.0 - kE2 * s * s);
    h = std::abs(phi) < std::numbers::pi / 4.0 ? p / std::cos(phi) - n : e.z / s - n * (1.0 - kE2);
    const double next = std::atan2(e.z, p * (1.0 - kE2 * n / (n + h)));
    const bool done = std::abs(next - phi) < 1e-15;
    phi = next;
    if (done) break;
  }
  const double s = std::sin(phi);
  const double n = kWgs84A / std::sqrt(1.0 - kE2 * s * s);
  h = std::abs(phi) < std::numbers::pi / 4.0 ? p / std::cos(phi) - n : e.z / s - n * (1.0 - kE2);
  GeoSample g;
  g.lat = phi / kDeg;
  g.lon = lam / kDeg;
  g.alt = h;
  return g;
}

LocalFrame make_local_frame(const GeoSample& origin) {
  check_range(origin.lat, origin.lon);
  const double phi = origin.lat * kDeg;
  const double lam = origin.lon * kDeg;
  LocalFrame f;
  f.origin = origin;
  f.origin_ecef = geodetic_to_ecef(origin.lat, origin.lon, origin.alt);
  f.east = {-std::sin(lam), std::cos(lam), 0.0};
  f.north = {-std::sin(phi) * std::cos(lam), -std::sin(phi) * std::sin(lam), std::cos(phi)};
  f.up = {std::cos(phi) * std::cos(lam), std::cos(phi) * std::sin(lam), std::sin(phi)};
  return f;
}

Vec3 geo_to_local(const LocalFrame& frame, const GeoSample& p) {
  check_range(p.lat, p.lon);
  const Vec3 d = geodetic_to_ecef(p.lat, p.lon, p.alt) - frame.origin_ecef;
  if (norm(d) > kTangentPlaneRange) {
    throw std::invalid_argument("point is " + std::to_string(norm(d)) +
                                " m from the scene origin, beyond the tangent-plane range");
  }
  return {dot(d, frame.east), dot(d, frame.north), dot(d, frame.up)};
}

Vec3 geo_to_local(const LocalFrame& frame, const LatLon& p, double alt) {
  GeoSample g;
  g.lat = p.lat;
  g.lon = p.lon;
  g.alt = alt;
  return geo_to_local(frame, g);
}

GeoSample local_to_geo(const LocalFrame& frame, const Vec3& l) {
  const Vec3 e = frame.origin_ecef + frame.east * l.x + frame.north * l.y + frame.up * l.z;
  return ecef_to_geodetic(e);
}

double wrap_degrees(double deg) {
  double w = std::fmod(deg, 360.0);
  if (w < 0.0) w += 360.0;
  return w >= 360.0 ? 0.0 : w;
}

double heading_of(const Vec3& d) { return wrap_degrees(std::atan2(d.x, d.y) / kDeg); }

Vec3 heading_vector(double heading_deg) {
  const double h = heading_deg * kDeg;
  return {std::sin(h), std::cos(h), 0.0};
}

double lerp_heading(double a, double b, double alpha) {
  double delta = std::fmod(b - a, 360.0);
  if (delta > 180.0) delta -= 360.0;
  if (delta < -180.0) delta += 360.0;
  return wrap_degrees(a + delta * alpha);
}

}  // namespace drivelab
