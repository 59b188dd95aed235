#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <vector>

namespace aisbay {

using Vec3 = Eigen::Vector3d;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kDeg = kPi / 180.0;
inline constexpr double kKnot = 1852.0 / 3600.0;  // m/s per knot
inline constexpr double kEarthRadius = 6371008.8;  // mean radius, m
inline constexpr double kWgs84A = 6378137.0;
inline constexpr double kWgs84F = 1.0 / 298.257223563;

struct LatLon {
    double lat = 0.0;
    double lon = 0.0;
};

inline bool operator==(const LatLon& a, const LatLon& b) { return a.lat == b.lat && a.lon == b.lon; }

Vec3 to_unit(const LatLon& p);
LatLon to_latlon(const Vec3& v);

// WGS84 ellipsoidal distance in metres.
double geodesic_distance(const LatLon& a, const LatLon& b);

// Great-circle helpers on the mean-radius sphere.
double central_angle(const Vec3& a, const Vec3& b);
double sphere_distance(const LatLon& a, const LatLon& b);
double initial_bearing(const LatLon& a, const LatLon& b);  // degrees clockwise from north
LatLon destination(const LatLon& p, double bearing_deg, double dist_m);
Vec3 slerp(const Vec3& a, const Vec3& b, double f);

// Distance from p to the minor arc a-b (metres), and the arc fraction of the closest point.
struct ArcProjection {
    double distance = 0.0;
    double fraction = 0.0;
};
ArcProjection project_to_arc(const Vec3& p, const Vec3& a, const Vec3& b);

// Local tangent frame at `origin`: columns east, north, up.
struct TangentFrame {
    Vec3 east, north, up;
};
TangentFrame tangent_frame(const Vec3& origin);

// Gnomonic projection onto the tangent plane at `origin` (radians of the unit sphere).
// Returns false if v is in the opposite hemisphere.
bool gnomonic(const Vec3& origin, const Vec3& v, double& x, double& y);

// WGS84 radii of curvature.
double meridional_radius(double lat_deg);
double prime_vertical_radius(double lat_deg);

// Local east/north offset in metres of q relative to p (ellipsoidal radii at p).
Eigen::Vector2d enu_offset(const LatLon& p, const LatLon& q);

}  // namespace aisbay
