#include "aisbay/areas.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

namespace aisbay {

using nlohmann::json;

Polygon::Polygon(std::vector<LatLon> ring) {
    for (const auto& p : ring) {
        if (!std::isfinite(p.lat) || !std::isfinite(p.lon) || std::abs(p.lat) > 90.0 || std::abs(p.lon) > 180.0)
            throw std::invalid_argument("polygon: vertex out of range");
        if (!ring_.empty() && ring_.back() == p) continue;
        ring_.push_back(p);
    }
    if (ring_.size() > 1 && ring_.front() == ring_.back()) ring_.pop_back();
    if (ring_.size() < 3) throw std::invalid_argument("polygon: fewer than 3 distinct vertices");
    Vec3 sum = Vec3::Zero();
    for (const auto& p : ring_) {
        verts_.push_back(to_unit(p));
        sum += verts_.back();
    }
    if (sum.norm() < 1e-12) throw std::invalid_argument("polygon: vertices have no mean direction");
    centroid_ = sum.normalized();
    double cap = 0.0;
    for (const auto& v : verts_) cap = std::max(cap, central_angle(centroid_, v));
    cap_ = cap + 1e-3;
    if (cap_ >= kPi / 2) cap_ = kPi;
}

bool origin_in_planar_polygon(const std::vector<Eigen::Vector2d>& pts, double eps) {
    const std::size_t n = pts.size();
    bool inside = false;
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const Eigen::Vector2d& a = pts[j];
        const Eigen::Vector2d& b = pts[i];
        const Eigen::Vector2d ab = b - a;
        const double len2 = ab.squaredNorm();
        const double t = len2 > 0 ? std::clamp(-a.dot(ab) / len2, 0.0, 1.0) : 0.0;
        if ((a + t * ab).norm() <= eps) return true;
        if ((a.y() > 0) != (b.y() > 0)) {
            const double x = a.x() - a.y() * ab.x() / ab.y();
            if (x > 0) inside = !inside;
        }
    }
    return inside;
}

namespace {

// Azimuth-sum winding test, used when some vertex lies beyond the gnomonic horizon.
bool winding_contains(const std::vector<Vec3>& verts, const Vec3& v) {
    const TangentFrame f = tangent_frame(v);
    double total = 0.0;
    const std::size_t n = verts.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec3& a = verts[i];
        const Vec3& b = verts[(i + 1) % n];
        // on the boundary arc counts as inside, matching the planar path
        if ((v - a).norm() <= 1e-12) return true;
        const Vec3 nab = a.cross(b).normalized();
        if (std::abs(v.dot(nab)) <= 1e-12 && a.cross(v).dot(nab) >= 0 && v.cross(b).dot(nab) >= 0) return true;
        const double aa = std::atan2(a.dot(f.east), a.dot(f.north));
        const double ab = std::atan2(b.dot(f.east), b.dot(f.north));
        double d = ab - aa;
        while (d > kPi) d -= 2 * kPi;
        while (d <= -kPi) d += 2 * kPi;
        total += d;
    }
    return std::abs(total) > kPi;
}

bool segments_cross(const Eigen::Vector2d& p1, const Eigen::Vector2d& p2, const Eigen::Vector2d& q1,
                    const Eigen::Vector2d& q2) {
    auto orient = [](const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c) {
        const double v = (b - a).x() * (c - a).y() - (b - a).y() * (c - a).x();
        return (v > 0) - (v < 0);
    };
    const int o1 = orient(p1, p2, q1), o2 = orient(p1, p2, q2);
    const int o3 = orient(q1, q2, p1), o4 = orient(q1, q2, p2);
    return o1 * o2 < 0 && o3 * o4 < 0;
}

}  // namespace

bool Polygon::contains(const LatLon& p) const {
    if (verts_.empty()) return false;
    const Vec3 v = to_unit(p);
    if (cap_ < kPi && central_angle(v, centroid_) > cap_) return false;
    std::vector<Eigen::Vector2d> pts;
    pts.reserve(verts_.size());
    for (const auto& w : verts_) {
        double x, y;
        if (!gnomonic(v, w, x, y) || std::abs(x) > 1e6 || std::abs(y) > 1e6) return winding_contains(verts_, v);
        pts.emplace_back(x, y);
    }
    return origin_in_planar_polygon(pts, 1e-12);
}

bool Polygon::is_simple() const {
    std::vector<Eigen::Vector2d> pts;
    for (const auto& w : verts_) {
        double x, y;
        if (!gnomonic(centroid_, w, x, y)) return false;
        pts.emplace_back(x, y);
    }
    const std::size_t n = pts.size();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 2; j < n; ++j) {
            if (i == 0 && j == n - 1) continue;
            if (segments_cross(pts[i], pts[(i + 1) % n], pts[j], pts[(j + 1) % n])) return false;
        }
    return true;
}

bool point_in_area(double lat, double lon, const Polygon& polygon) { return polygon.contains({lat, lon}); }

const TransitArea* Geometry::main_area() const {
    for (const auto& a : areas)
        if (a.index == 0) return &a;
    return nullptr;
}

bool Geometry::on_land(const LatLon& p) const {
    return std::any_of(land.begin(), land.end(), [&p](const Polygon& poly) { return poly.contains(p); });
}

namespace {

Polygon ring_from_json(const json& ring) {
    std::vector<LatLon> pts;
    for (const auto& c : ring) {
        if (!c.is_array() || c.size() < 2) throw std::invalid_argument("geojson: bad coordinate");
        pts.push_back({c[1].get<double>(), c[0].get<double>()});
    }
    Polygon p(std::move(pts));
    if (!p.is_simple()) throw std::invalid_argument("geojson: self-intersecting polygon");
    return p;
}

std::vector<Polygon> polygons_from_geometry(const json& geom) {
    const std::string type = geom.at("type").get<std::string>();
    const json& coords = geom.at("coordinates");
    std::vector<Polygon> out;
    if (type == "Polygon") {
        if (coords.size() != 1) throw std::invalid_argument("geojson: polygon holes are not supported");
        out.push_back(ring_from_json(coords[0]));
    } else if (type == "MultiPolygon") {
        for (const auto& poly : coords) {
            if (poly.size() != 1) throw std::invalid_argument("geojson: polygon holes are not supported");
            out.push_back(ring_from_json(poly[0]));
        }
    } else {
        throw std::invalid_argument("geojson: unsupported geometry " + type);
    }
    return out;
}

int area_index(const std::string& id) {
    if (id == "main") return 0;
    std::size_t used = 0;
    int k = -1;
    try {
        k = std::stoi(id, &used);
    } catch (const std::exception&) {
    }
    if (used != id.size() || k < 1 || k > 10) throw std::invalid_argument("transit area id must be main or 1..10: " + id);
    return k;
}

bool interiors_overlap(const Polygon& a, const Polygon& b) {
    // Strictly-inside vertex or proper edge crossing, evaluated in a gnomonic plane at a's centroid.
    auto project = [&a](const Polygon& p, std::vector<Eigen::Vector2d>& out) {
        for (const auto& w : p.vertices()) {
            double x, y;
            if (!gnomonic(a.centroid(), w, x, y)) return false;
            out.emplace_back(x, y);
        }
        return true;
    };
    std::vector<Eigen::Vector2d> pa, pb;
    if (!project(a, pa) || !project(b, pb)) return false;
    for (std::size_t i = 0; i < pa.size(); ++i)
        for (std::size_t j = 0; j < pb.size(); ++j)
            if (segments_cross(pa[i], pa[(i + 1) % pa.size()], pb[j], pb[(j + 1) % pb.size()])) return true;
    auto strictly_inside = [](const std::vector<Eigen::Vector2d>& poly, const Eigen::Vector2d& q) {
        std::vector<Eigen::Vector2d> shifted;
        for (const auto& v : poly) shifted.push_back(v - q);
        if (origin_in_planar_polygon(shifted, 1e-12)) {
            // exclude boundary
            for (std::size_t i = 0; i < shifted.size(); ++i) {
                const auto& s = shifted[i];
                const auto& t = shifted[(i + 1) % shifted.size()];
                const Eigen::Vector2d st = t - s;
                const double u = std::clamp(-s.dot(st) / st.squaredNorm(), 0.0, 1.0);
                if ((s + u * st).norm() <= 1e-12) return false;
            }
            return true;
        }
        return false;
    };
    for (const auto& q : pa)
        if (strictly_inside(pb, q)) return true;
    for (const auto& q : pb)
        if (strictly_inside(pa, q)) return true;
    return false;
}

}  // namespace

Geometry load_geometry_geojson(const std::string& text) {
    const json j = json::parse(text);
    if (j.value("type", "") != "FeatureCollection") throw std::invalid_argument("geojson: expected FeatureCollection");
    Geometry g;
    std::set<int> seen;
    for (const auto& f : j.at("features")) {
        const json& props = f.at("properties");
        const std::string role = props.value("role", "transit");
        auto polys = polygons_from_geometry(f.at("geometry"));
        if (role == "roi") {
            if (!g.roi.empty() || polys.size() != 1) throw std::invalid_argument("geojson: exactly one roi polygon expected");
            g.roi = polys[0];
        } else if (role == "land") {
            for (auto& p : polys) g.land.push_back(std::move(p));
        } else if (role == "transit") {
            if (polys.size() != 1) throw std::invalid_argument("geojson: transit area must be a single polygon");
            TransitArea a;
            a.id = props.at("id").is_string() ? props.at("id").get<std::string>() : std::to_string(props.at("id").get<int>());
            a.index = area_index(a.id);
            a.t0_hours = props.at("t0_hours").get<double>();
            if (!(a.t0_hours >= 0.0)) throw std::invalid_argument("geojson: t0_hours must be >= 0");
            if (!seen.insert(a.index).second) throw std::invalid_argument("geojson: duplicate transit area " + a.id);
            a.polygon = polys[0];
            g.areas.push_back(std::move(a));
        } else {
            throw std::invalid_argument("geojson: unknown role " + role);
        }
    }
    std::sort(g.areas.begin(), g.areas.end(), [](const TransitArea& a, const TransitArea& b) { return a.index < b.index; });
    for (std::size_t i = 0; i < g.areas.size(); ++i)
        for (std::size_t k = i + 1; k < g.areas.size(); ++k)
            if (g.areas[i].index > 0 && interiors_overlap(g.areas[i].polygon, g.areas[k].polygon))
                throw std::invalid_argument("geojson: cascade areas " + g.areas[i].id + " and " + g.areas[k].id + " overlap");
    return g;
}

std::string geometry_to_geojson(const Geometry& g) {
    nlohmann::ordered_json fc;
    fc["type"] = "FeatureCollection";
    fc["features"] = json::array();
    auto feature = [](const Polygon& p, nlohmann::ordered_json props) {
        nlohmann::ordered_json ring = json::array();
        for (const auto& v : p.ring()) ring.push_back({v.lon, v.lat});
        ring.push_back({p.ring().front().lon, p.ring().front().lat});
        nlohmann::ordered_json f;
        f["type"] = "Feature";
        f["properties"] = std::move(props);
        f["geometry"] = {{"type", "Polygon"}, {"coordinates", json::array({ring})}};
        return f;
    };
    if (!g.roi.empty()) fc["features"].push_back(feature(g.roi, {{"role", "roi"}}));
    for (const auto& a : g.areas)
        fc["features"].push_back(feature(a.polygon, {{"role", "transit"}, {"id", a.id}, {"t0_hours", a.t0_hours}}));
    for (const auto& l : g.land) fc["features"].push_back(feature(l, {{"role", "land"}}));
    return fc.dump(1);
}

namespace {
AreaPolicy upto(PolicyMode mode, int last) {
    AreaPolicy p;
    p.mode = mode;
    for (int i = 0; i <= last; ++i) p.included.push_back(i);
    return p;
}
}  // namespace

AreaPolicy AreaPolicy::hi() { return upto(PolicyMode::Hi, 5); }
AreaPolicy AreaPolicy::df() { return upto(PolicyMode::Df, 8); }
AreaPolicy AreaPolicy::low() { return upto(PolicyMode::Low, 10); }

AreaPolicy AreaPolicy::parse(const std::string& s) {
    if (s == "hi") return hi();
    if (s == "df") return df();
    if (s == "low") return low();
    AreaPolicy p;
    p.mode = PolicyMode::Custom;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        p.included.push_back(area_index(tok));
    }
    if (p.included.empty()) throw std::invalid_argument("area policy: empty list");
    std::sort(p.included.begin(), p.included.end());
    p.included.erase(std::unique(p.included.begin(), p.included.end()), p.included.end());
    return p;
}

bool AreaPolicy::includes(int index) const {
    return std::binary_search(included.begin(), included.end(), index);
}

std::string AreaPolicy::name() const {
    switch (mode) {
        case PolicyMode::Hi: return "hi";
        case PolicyMode::Df: return "df";
        case PolicyMode::Low: return "low";
        case PolicyMode::Custom: break;
    }
    std::string out;
    for (int i : included) {
        if (!out.empty()) out += ',';
        out += i == 0 ? "main" : std::to_string(i);
    }
    return out;
}

const TransitArea* locate_area(const Geometry& g, const AreaPolicy& policy, const LatLon& p) {
    const TransitArea* best = nullptr;
    for (const auto& a : g.areas) {
        if (!policy.includes(a.index) || !a.polygon.contains(p)) continue;
        if (!best || a.t0_hours < best->t0_hours) best = &a;
    }
    return best;
}

}  // namespace aisbay
