#include "aisbay/geo.hpp"

#include <boost/geometry/formulas/karney_inverse.hpp>
#include <boost/geometry/srs/spheroid.hpp>

#include <algorithm>
#include <cmath>

namespace aisbay {

Vec3 to_unit(const LatLon& p) {
    const double la = p.lat * kDeg, lo = p.lon * kDeg;
    return {std::cos(la) * std::cos(lo), std::cos(la) * std::sin(lo), std::sin(la)};
}

LatLon to_latlon(const Vec3& v) {
    const double h = std::hypot(v.x(), v.y());
    return {std::atan2(v.z(), h) / kDeg, std::atan2(v.y(), v.x()) / kDeg};
}

double geodesic_distance(const LatLon& a, const LatLon& b) {
    if (a == b) return 0.0;
    namespace bg = boost::geometry;
    static const bg::srs::spheroid<double> wgs84(kWgs84A, kWgs84A * (1.0 - kWgs84F));
    using inverse = bg::formula::karney_inverse<double, true, false>;
    return inverse::apply(a.lon, a.lat, b.lon, b.lat, wgs84).distance;  // Boost 1.74 takes degrees here
}

double central_angle(const Vec3& a, const Vec3& b) {
    return std::atan2(a.cross(b).norm(), a.dot(b));
}

double sphere_distance(const LatLon& a, const LatLon& b) {
    return central_angle(to_unit(a), to_unit(b)) * kEarthRadius;
}

TangentFrame tangent_frame(const Vec3& origin) {
    TangentFrame f;
    f.up = origin.normalized();
    Vec3 e = Vec3::UnitZ().cross(f.up);
    if (e.norm() < 1e-12) e = Vec3::UnitY();
    f.east = e.normalized();
    f.north = f.up.cross(f.east);
    return f;
}

double initial_bearing(const LatLon& a, const LatLon& b) {
    const Vec3 pa = to_unit(a), pb = to_unit(b);
    const TangentFrame f = tangent_frame(pa);
    const double brg = std::atan2(pb.dot(f.east), pb.dot(f.north)) / kDeg;
    return brg < 0 ? brg + 360.0 : brg;
}

LatLon destination(const LatLon& p, double bearing_deg, double dist_m) {
    const Vec3 v = to_unit(p);
    const TangentFrame f = tangent_frame(v);
    const double b = bearing_deg * kDeg, d = dist_m / kEarthRadius;
    const Vec3 dir = std::cos(b) * f.north + std::sin(b) * f.east;
    return to_latlon(std::cos(d) * v + std::sin(d) * dir);
}

Vec3 slerp(const Vec3& a, const Vec3& b, double f) {
    const double w = central_angle(a, b);
    if (w < 1e-15) return a;
    const double s = std::sin(w);
    return (std::sin((1.0 - f) * w) / s) * a + (std::sin(f * w) / s) * b;
}

ArcProjection project_to_arc(const Vec3& p, const Vec3& a, const Vec3& b) {
    const double ab = central_angle(a, b);
    const double da = central_angle(p, a), db = central_angle(p, b);
    ArcProjection end = da <= db ? ArcProjection{da * kEarthRadius, 0.0}
                                 : ArcProjection{db * kEarthRadius, 1.0};
    if (ab < 1e-15) return {da * kEarthRadius, 0.0};
    const Vec3 n = a.cross(b).normalized();
    const double s = p.dot(n);
    Vec3 foot = p - s * n;
    if (foot.norm() < 1e-15) return end;
    foot.normalize();
    if (a.cross(foot).dot(n) < 0.0 || foot.cross(b).dot(n) < 0.0) return end;
    return {std::abs(std::asin(std::clamp(s, -1.0, 1.0))) * kEarthRadius,
            std::clamp(central_angle(a, foot) / ab, 0.0, 1.0)};
}

bool gnomonic(const Vec3& origin, const Vec3& v, double& x, double& y) {
    const TangentFrame f = tangent_frame(origin);
    const double z = v.dot(f.up);
    if (z <= 0.0) return false;
    x = v.dot(f.east) / z;
    y = v.dot(f.north) / z;
    return true;
}

namespace {
constexpr double kE2 = kWgs84F * (2.0 - kWgs84F);
}

double meridional_radius(double lat_deg) {
    const double s = std::sin(lat_deg * kDeg);
    return kWgs84A * (1.0 - kE2) / std::pow(1.0 - kE2 * s * s, 1.5);
}

double prime_vertical_radius(double lat_deg) {
    const double s = std::sin(lat_deg * kDeg);
    return kWgs84A / std::sqrt(1.0 - kE2 * s * s);
}

Eigen::Vector2d enu_offset(const LatLon& p, const LatLon& q) {
    const double m = meridional_radius(p.lat);
    const double n = prime_vertical_radius(p.lat) * std::cos(p.lat * kDeg);
    double dlon = q.lon - p.lon;
    if (dlon > 180.0) dlon -= 360.0;
    if (dlon < -180.0) dlon += 360.0;
    return {dlon * kDeg * n, (q.lat - p.lat) * kDeg * m};
}

}  // namespace aisbay
