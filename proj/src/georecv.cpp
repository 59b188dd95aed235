#include "aisbay/georecv.hpp"

#include "aisbay/parallel.hpp"

#include <Eigen/Eigenvalues>
#include <boost/math/distributions/fisher_f.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace aisbay {

namespace {

Vec3 pole_of(const ShadowSegment& s) {
    const Vec3 n = to_unit(s.a).cross(to_unit(s.b));
    if (n.norm() < 1e-15) throw std::invalid_argument("shadow segment " + s.id + ": endpoints coincide or are antipodal");
    return n.normalized();
}

Vec3 midpoint_of(const ShadowSegment& s) { return (to_unit(s.a) + to_unit(s.b)).normalized(); }

}  // namespace

Intersection intersect(const ShadowSegment& s1, const ShadowSegment& s2, double weight_cutoff) {
    const Vec3 n1 = pole_of(s1), n2 = pole_of(s2);
    const Vec3 c = n1.cross(n2);
    const double sin_g = c.norm();
    Intersection x;
    if (sin_g < 1e-10) {  // normals of km-scale segments carry ~1e-13 rounding
        x.weight = -1;  // same circle
        return x;
    }
    Vec3 p = c / sin_g;
    const Vec3 m1 = midpoint_of(s1), m2 = midpoint_of(s2);
    const double plus = central_angle(p, m1) + central_angle(p, m2);
    const double minus = central_angle(-p, m1) + central_angle(-p, m2);
    if (minus < plus || (minus == plus && p.z() < 0)) p = -p;
    x.position = p;
    x.latlon = to_latlon(p);
    x.angle_deg = std::atan2(sin_g, std::abs(n1.dot(n2))) / kDeg;
    const double w = std::sin(x.angle_deg * kDeg);
    x.weight = w < weight_cutoff ? 0.0 : w;
    return x;
}

IntersectionSet pairwise_intersections(const std::vector<ShadowSegment>& segments, double weight_cutoff, unsigned threads) {
    if (segments.size() < 2) throw std::invalid_argument("intersections need at least two segments");
    for (const auto& s : segments)
        if (s.receiver != segments.front().receiver)
            throw std::invalid_argument("segments belong to different receivers");
    const std::size_t n = segments.size();
    std::vector<Intersection> all(n * (n - 1) / 2);
    parallel_for(n, threads, [&](std::size_t i) {
        std::size_t k = i * (2 * n - i - 1) / 2;
        for (std::size_t j = i + 1; j < n; ++j, ++k) {
            all[k] = intersect(segments[i], segments[j], weight_cutoff);
            all[k].first = i;
            all[k].second = j;
        }
    });
    IntersectionSet out;
    for (auto& x : all) {
        if (x.weight < 0)
            ++out.degenerate;
        else
            out.points.push_back(x);
    }
    return out;
}

double f_quantile(double d1, double d2, double p) {
    boost::math::fisher_f_distribution<double> f(d1, d2);
    return boost::math::quantile(f, p);
}

OutlierResult remove_outliers(const std::vector<Vec3>& points, double alpha) {
    if (points.size() < 5) throw std::invalid_argument("outlier test needs at least five points");
    if (!(alpha > 0 && alpha < 1)) throw std::invalid_argument("alpha must lie in (0, 1)");
    OutlierResult r;
    r.kept.resize(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) r.kept[i] = i;
    while (r.kept.size() >= 5) {
        const long double n = static_cast<long double>(r.kept.size());
        long double sx = 0, sy = 0, sz = 0;
        for (auto i : r.kept) {
            sx += points[i].x();
            sy += points[i].y();
            sz += points[i].z();
        }
        const long double R = std::sqrt(sx * sx + sy * sy + sz * sz);
        if (n - R <= 1e-12L) {
            r.infinite_concentration = true;
            break;
        }
        long double best = -1;
        std::size_t best_k = 0;
        for (std::size_t k = 0; k < r.kept.size(); ++k) {
            const Vec3& x = points[r.kept[k]];
            const long double ax = sx - x.x(), ay = sy - x.y(), az = sz - x.z();
            const long double Rj = std::sqrt(ax * ax + ay * ay + az * az);
            const long double den = n - 1 - Rj;
            const long double e = den > 0 ? (n - 2) * (1 + Rj - R) / den : std::numeric_limits<long double>::infinity();
            if (e > best) {
                best = e;
                best_k = k;
            }
        }
        const double crit = f_quantile(2.0, 2.0 * (static_cast<double>(n) - 2.0), 1.0 - alpha / static_cast<double>(n));
        if (!(best > crit)) break;
        r.removed.push_back(r.kept[best_k]);
        r.kept.erase(r.kept.begin() + static_cast<std::ptrdiff_t>(best_k));
    }
    return r;
}

namespace {

double total_weight(const std::vector<Vec3>& pts, const std::vector<double>& w) {
    if (pts.empty()) throw std::invalid_argument("no points");
    if (w.size() != pts.size()) throw std::invalid_argument("weights and points differ in length");
    double s = 0;
    for (double x : w) {
        if (!(x >= 0)) throw std::invalid_argument("weights must be non-negative");
        s += x;
    }
    if (!(s > 0)) throw std::invalid_argument("weights sum to zero");
    return s;
}

Vec3 weighted_resultant(const std::vector<Vec3>& pts, const std::vector<double>& w) {
    long double x = 0, y = 0, z = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        x += w[i] * pts[i].x();
        y += w[i] * pts[i].y();
        z += w[i] * pts[i].z();
    }
    return Vec3(static_cast<double>(x), static_cast<double>(y), static_cast<double>(z));
}

Vec3 log_map(const Vec3& m, const Vec3& x, double& d) {
    const Vec3 v = x - x.dot(m) * m;
    const double s = v.norm();
    d = std::atan2(s, x.dot(m));
    return s > 0 ? Vec3(v * (d / s)) : Vec3(Vec3::Zero());
}

Vec3 exp_map(const Vec3& m, const Vec3& t) {
    const double s = t.norm();
    if (s == 0) return m;
    return (std::cos(s) * m + std::sin(s) * (t / s)).normalized();
}

}  // namespace

Vec3 spherical_location(const std::vector<Vec3>& points, const std::vector<double>& weights, LocationEstimator est) {
    total_weight(points, weights);
    const Vec3 res = weighted_resultant(points, weights);
    if (res.norm() < 1e-14) throw std::invalid_argument("resultant vanishes; mean direction undefined");
    Vec3 m = res.normalized();
    if (est == LocationEstimator::Mean) return m;
    for (int iter = 0; iter < 10000; ++iter) {
        Vec3 num = Vec3::Zero();
        double den = 0, coincident = 0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            if (weights[i] == 0) continue;
            double d;
            const Vec3 v = log_map(m, points[i], d);
            if (d < 1e-15) {
                coincident += weights[i];
                continue;
            }
            num += weights[i] * v / d;
            den += weights[i] / d;
        }
        if (den == 0) break;
        const double pull = num.norm();
        if (pull <= coincident) break;
        Vec3 step = num / den;
        if (coincident > 0) step *= 1.0 - coincident / pull;
        m = exp_map(m, step);
        if (step.norm() < 1e-12) break;
    }
    return m;
}

KentFit fit_kent(const std::vector<Vec3>& points, const std::vector<double>& weights, const std::optional<Vec3>& centre) {
    const double W = total_weight(points, weights);
    KentFit f;
    const Vec3 res = weighted_resultant(points, weights) / W;
    if (centre) {
        f.mean = centre->normalized();
        f.mu = res.dot(f.mean);
    } else {
        if (res.norm() < 1e-14) throw std::invalid_argument("resultant vanishes; mean direction undefined");
        f.mean = res.normalized();
        f.mu = res.norm();
    }
    if (!(f.mu > 0)) throw std::invalid_argument("kent fit: points do not concentrate around the centre");
    const TangentFrame tf = tangent_frame(f.mean);
    Eigen::Matrix2d s = Eigen::Matrix2d::Zero();
    for (std::size_t i = 0; i < points.size(); ++i) {
        const Eigen::Vector2d u(points[i].dot(tf.east), points[i].dot(tf.north));
        s += (weights[i] / W) * u * u.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(s);
    const double lmin = es.eigenvalues()(0), lmax = es.eigenvalues()(1);
    if (!(lmax > 0) || lmin <= 1e-10 * lmax) throw std::invalid_argument("kent fit: scatter is rank deficient");
    Eigen::Vector2d major = es.eigenvectors().col(1);
    // orientation in (-90, 90]
    double theta = std::atan2(major(0), major(1)) / kDeg;
    if (theta <= -90) theta += 180;
    if (theta > 90) theta -= 180;
    f.theta_deg = theta;
    const double th = theta * kDeg;
    f.major = (std::sin(th) * tf.east + std::cos(th) * tf.north).normalized();
    f.minor = f.mean.cross(f.major).normalized();
    f.sigma2 = std::sqrt(lmax);
    f.sigma3 = std::sqrt(lmin);
    f.a = f.sigma2 / f.mu;
    f.b = f.sigma3 / f.mu;
    return f;
}

double containment_scale(double p) {
    if (!(p > 0 && p < 1)) throw std::invalid_argument("probability must lie in (0, 1)");
    return std::sqrt(-2.0 * std::log1p(-p));
}

double confidence_scale(std::size_t n, double p) {
    if (n <= 2) throw std::invalid_argument("confidence ellipse needs more than two segments");
    if (!(p > 0 && p < 1)) throw std::invalid_argument("probability must lie in (0, 1)");
    const double m = 2.0, dn = static_cast<double>(n);
    return std::sqrt(m * f_quantile(m, dn - m, p) / (dn - m));
}

double confidence_scale_large_n(std::size_t n, double p) {
    if (n <= 2) throw std::invalid_argument("confidence ellipse needs more than two segments");
    return containment_scale(p) / std::sqrt(static_cast<double>(n) - 2.0);
}

namespace {

Ellipse scaled(const KentFit& fit, double k) {
    Ellipse e;
    e.centre = to_latlon(fit.mean);
    e.a = fit.a * k;
    e.b = fit.b * k;
    e.a_m = e.a * kEarthRadius;
    e.b_m = e.b * kEarthRadius;
    e.theta_deg = fit.theta_deg;
    e.degenerate = !(e.b > 0);
    return e;
}

Ellipse degenerate_at(const Vec3& c) {
    Ellipse e;
    e.centre = to_latlon(c);
    e.degenerate = true;
    return e;
}

}  // namespace

Ellipse containment_ellipse(const KentFit& fit, double p) { return scaled(fit, containment_scale(p)); }

Ellipse confidence_ellipse(const KentFit& fit, std::size_t n, double p) { return scaled(fit, confidence_scale(n, p)); }

bool inside_ellipse(const KentFit& fit, double scale, const Vec3& x) {
    if (x.dot(fit.mean) <= 0) return false;
    const double u = x.dot(fit.major) / (fit.a * scale), v = x.dot(fit.minor) / (fit.b * scale);
    return u * u + v * v <= 1.0;
}

double radio_horizon_km(double h_t, double h_r, double k) {
    if (!(h_t >= 0) || !(h_r >= 0)) throw std::invalid_argument("antenna heights must be non-negative");
    if (!(k > 0)) throw std::invalid_argument("refraction factor must be positive");
    return std::sqrt(2.0 * k * kHorizonEarthRadiusKm / 1000.0) * (std::sqrt(h_r) + std::sqrt(h_t));
}

double required_receiver_height_m(double d_km, double h_t, double k) {
    if (!(h_t >= 0) || !(d_km >= 0)) throw std::invalid_argument("distance and height must be non-negative");
    const double root = d_km / std::sqrt(2.0 * k * kHorizonEarthRadiusKm / 1000.0) - std::sqrt(h_t);
    return root > 0 ? root * root : 0.0;
}

ReceiverEstimate estimate_receiver(const std::vector<ShadowSegment>& segments, const EstimateOptions& opt) {
    if (segments.size() < 3) throw std::invalid_argument("receiver estimate needs at least three segments");
    ReceiverEstimate r;
    r.receiver = segments.front().receiver;
    r.segments = segments.size();
    const IntersectionSet xs = pairwise_intersections(segments, opt.weight_cutoff, opt.threads);
    r.intersections = xs.points.size();
    r.degenerate_pairs = xs.degenerate;
    std::vector<Vec3> pts;
    for (const auto& x : xs.points) pts.push_back(x.position);
    std::vector<std::size_t> kept(pts.size());
    for (std::size_t i = 0; i < kept.size(); ++i) kept[i] = i;
    if (pts.size() >= 5) {
        const OutlierResult o = remove_outliers(pts, opt.alpha);
        kept = o.kept;
        std::sort(kept.begin(), kept.end());
        r.outliers = o.removed.size();
    }
    std::vector<Vec3> kp;
    std::vector<double> w, ones;
    for (auto i : kept) {
        kp.push_back(pts[i]);
        w.push_back(xs.points[i].weight);
        ones.push_back(1.0);
        if (xs.points[i].weight == 0) ++r.zero_weight;
    }
    if (kp.empty()) throw std::invalid_argument("no intersections to fit");
    const Vec3 wmean = spherical_location(kp, w, LocationEstimator::Mean);
    const Vec3 umean = spherical_location(kp, ones, LocationEstimator::Mean);
    const Vec3 wmed = spherical_location(kp, w, LocationEstimator::Median);
    const Vec3 umed = spherical_location(kp, ones, LocationEstimator::Median);
    r.weighted_mean = to_latlon(wmean);
    r.unweighted_mean = to_latlon(umean);
    r.weighted_median = to_latlon(wmed);
    r.unweighted_median = to_latlon(umed);

    double spread = 0;
    for (const auto& p : kp) spread = std::max(spread, central_angle(p, umean));
    const bool median_conf = segments.size() >= kMinSegmentsForMedianConfidence;
    if (spread < 1e-10) {
        r.containment68 = degenerate_at(wmean);
        r.confidence_weighted_mean = degenerate_at(wmean);
        r.confidence_unweighted_mean = degenerate_at(umean);
        if (median_conf) {
            r.confidence_weighted_median = degenerate_at(wmed);
            r.confidence_unweighted_median = degenerate_at(umed);
        }
        return r;
    }
    const KentFit wf = fit_kent(kp, w);
    const KentFit uf = fit_kent(kp, ones);
    r.fit = wf;
    r.containment68 = containment_ellipse(wf, opt.containment_p);
    r.confidence_weighted_mean = confidence_ellipse(wf, segments.size(), opt.confidence_p);
    r.confidence_unweighted_mean = confidence_ellipse(uf, segments.size(), opt.confidence_p);
    if (median_conf) {
        // spatial median of a bivariate normal is less efficient than the mean by sqrt(4/pi)
        const double eff = std::sqrt(4.0 / kPi);
        r.confidence_weighted_median = scaled(fit_kent(kp, w, wmed), eff * confidence_scale(segments.size(), opt.confidence_p));
        r.confidence_unweighted_median = scaled(fit_kent(kp, ones, umed), eff * confidence_scale(segments.size(), opt.confidence_p));
    }
    return r;
}

std::vector<ShadowSegment> segments_from_geojson(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("segments: ") + e.what());
    }
    if (!j.is_object() || j.value("type", "") != "FeatureCollection" || !j.contains("features"))
        throw std::invalid_argument("segments: expected a FeatureCollection");
    std::vector<ShadowSegment> out;
    std::size_t k = 0;
    for (const auto& f : j.at("features")) {
        ++k;
        const auto& g = f.at("geometry");
        if (g.value("type", "") != "LineString") throw std::invalid_argument("segments: feature is not a LineString");
        const auto& c = g.at("coordinates");
        if (c.size() < 2) throw std::invalid_argument("segments: LineString needs two positions");
        ShadowSegment s;
        s.a = {c.front().at(1).get<double>(), c.front().at(0).get<double>()};
        s.b = {c.back().at(1).get<double>(), c.back().at(0).get<double>()};
        const auto props = f.value("properties", nlohmann::json::object());
        if (!props.contains("receiver_association") || !props["receiver_association"].is_string())
            throw std::invalid_argument("segments: feature " + std::to_string(k) + " lacks receiver_association");
        s.receiver = props["receiver_association"].get<std::string>();
        if (props.contains("id"))
            s.id = props["id"].is_string() ? props["id"].get<std::string>() : props["id"].dump();
        else
            s.id = std::to_string(k);
        if (s.a == s.b) throw std::invalid_argument("segments: endpoints coincide in " + s.id);
        out.push_back(std::move(s));
    }
    return out;
}

std::string segments_to_geojson(const std::vector<ShadowSegment>& segments) {
    nlohmann::ordered_json fc = {{"type", "FeatureCollection"}, {"features", nlohmann::ordered_json::array()}};
    for (const auto& s : segments) {
        nlohmann::ordered_json f;
        f["type"] = "Feature";
        f["properties"] = {{"id", s.id}, {"receiver_association", s.receiver}};
        f["geometry"] = {{"type", "LineString"},
                         {"coordinates", {{s.a.lon, s.a.lat}, {s.b.lon, s.b.lat}}}};
        fc["features"].push_back(f);
    }
    return fc.dump();
}

namespace {

nlohmann::ordered_json ellipse_json(const Ellipse& e) {
    return {{"lat", e.centre.lat}, {"lon", e.centre.lon}, {"a_m", e.a_m},
            {"b_m", e.b_m},        {"theta_deg", e.theta_deg}, {"degenerate", e.degenerate}};
}

}  // namespace

std::string estimate_to_json(const ReceiverEstimate& e) {
    nlohmann::ordered_json j;
    j["receiver"] = e.receiver;
    j["segments"] = e.segments;
    j["intersections"] = e.intersections;
    j["degenerate_pairs"] = e.degenerate_pairs;
    j["outliers"] = e.outliers;
    j["zero_weight"] = e.zero_weight;
    auto pos = [](const LatLon& p) { return nlohmann::ordered_json{{"lat", p.lat}, {"lon", p.lon}}; };
    j["weighted_mean"] = pos(e.weighted_mean);
    j["unweighted_mean"] = pos(e.unweighted_mean);
    j["weighted_median"] = pos(e.weighted_median);
    j["unweighted_median"] = pos(e.unweighted_median);
    j["containment_68"] = ellipse_json(e.containment68);
    j["confidence_95_weighted_mean"] = ellipse_json(e.confidence_weighted_mean);
    j["confidence_95_unweighted_mean"] = ellipse_json(e.confidence_unweighted_mean);
    j["confidence_95_weighted_median"] =
        e.confidence_weighted_median ? ellipse_json(*e.confidence_weighted_median) : nlohmann::ordered_json(nullptr);
    j["confidence_95_unweighted_median"] =
        e.confidence_unweighted_median ? ellipse_json(*e.confidence_unweighted_median) : nlohmann::ordered_json(nullptr);
    return j.dump(2);
}

}  // namespace aisbay
