#pragma once

#include "aisbay/geo.hpp"

#include <optional>
#include <string>
#include <vector>

namespace aisbay {

// Spherical polygon with great-circle edges, smaller than a hemisphere.
class Polygon {
public:
    Polygon() = default;
    explicit Polygon(std::vector<LatLon> ring);  // throws std::invalid_argument if < 3 distinct vertices

    bool contains(const LatLon& p) const;  // even-odd; boundary counts as inside
    const std::vector<LatLon>& ring() const { return ring_; }
    const std::vector<Vec3>& vertices() const { return verts_; }
    Vec3 centroid() const { return centroid_; }
    bool empty() const { return ring_.empty(); }
    bool is_simple() const;

private:
    std::vector<LatLon> ring_;
    std::vector<Vec3> verts_;
    Vec3 centroid_ = Vec3::Zero();
    double cap_ = 0.0;  // angular radius of a cap around centroid_ containing the polygon
};

bool point_in_area(double lat, double lon, const Polygon& polygon);

// Planar even-odd test of the origin against a closed polygon; boundary within eps is inside.
bool origin_in_planar_polygon(const std::vector<Eigen::Vector2d>& pts, double eps);

struct TransitArea {
    int index = 0;  // 0 = main area, 1..10 = cascade
    std::string id;
    Polygon polygon;
    double t0_hours = 0.0;
};

struct Geometry {
    Polygon roi;
    std::vector<TransitArea> areas;  // sorted by index
    std::vector<Polygon> land;

    const TransitArea* main_area() const;
    bool in_roi(const LatLon& p) const { return roi.empty() || roi.contains(p); }
    bool on_land(const LatLon& p) const;
};

// GeoJSON FeatureCollection. Feature properties: {"role": "roi" | "land" | "transit"};
// transit features also carry {"id": "main" | "1".."10", "t0_hours": number}.
Geometry load_geometry_geojson(const std::string& text);
std::string geometry_to_geojson(const Geometry& g);

enum class PolicyMode { Hi, Df, Low, Custom };

struct AreaPolicy {
    PolicyMode mode = PolicyMode::Df;
    std::vector<int> included;  // area indices, sorted

    static AreaPolicy hi();
    static AreaPolicy df();
    static AreaPolicy low();
    // "hi" | "df" | "low" | comma list such as "main,1,2,3"
    static AreaPolicy parse(const std::string& s);
    bool includes(int index) const;
    std::string name() const;
};

// Included area containing p with the smallest t0 (ties: lowest index), or nullptr.
const TransitArea* locate_area(const Geometry& g, const AreaPolicy& policy, const LatLon& p);

}  // namespace aisbay
