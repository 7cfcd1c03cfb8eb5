#pragma once

#include "drivelab/geometry.hpp"
#include "drivelab/model.hpp"

namespace drivelab {

// WGS-84 ellipsoid.
inline constexpr double kWgs84A = 6378137.0;
inline constexpr double kWgs84F = 1.0 / 298.257223563;

/// East-north-up tangent plane anchored at `origin`.
struct LocalFrame {
  GeoSample origin;
  Vec3 origin_ecef;
  Vec3 east;
  Vec3 north;
  Vec3 up;
};

/// Maximum distance from the frame origin accepted by geo_to_local, metres.
inline constexpr double kTangentPlaneRange = 50000.0;

LocalFrame make_local_frame(const GeoSample& origin);

Vec3 geodetic_to_ecef(double lat_deg, double lon_deg, double alt_m);
/// Iterative inverse; returns lat/lon in degrees and alt in metres.
GeoSample ecef_to_geodetic(const Vec3& ecef);

/// Throws std::invalid_argument for lat/lon outside their ranges or points
/// farther than kTangentPlaneRange from the origin.
Vec3 geo_to_local(const LocalFrame& frame, const GeoSample& p);
Vec3 geo_to_local(const LocalFrame& frame, const LatLon& p, double alt = 0.0);
GeoSample local_to_geo(const LocalFrame& frame, const Vec3& local);

/// Compass heading in [0, 360) of a local-frame direction (0 = north, clockwise).
double heading_of(const Vec3& direction);
/// Unit ground-plane vector for a compass heading.
Vec3 heading_vector(double heading_deg);
/// Wraps into [0, 360).
double wrap_degrees(double deg);
/// Shortest-arc interpolation between two compass headings.
double lerp_heading(double a_deg, double b_deg, double alpha);

}  // namespace drivelab
