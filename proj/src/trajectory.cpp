#include "aisbay/trajectory.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace aisbay {

std::vector<std::size_t> simplify_route(const std::vector<LatLon>& pts, double d_tol) {
    const std::size_t n = pts.size();
    if (n < 2) throw std::invalid_argument("simplify_route: at least 2 points required");
    std::vector<Vec3> u;
    u.reserve(n);
    for (const auto& p : pts) u.push_back(to_unit(p));
    std::vector<char> keep(n, 0);
    keep[0] = keep[n - 1] = 1;
    std::vector<std::pair<std::size_t, std::size_t>> stack{{0, n - 1}};
    while (!stack.empty()) {
        const auto [a, b] = stack.back();
        stack.pop_back();
        double worst = -1;
        std::size_t at = a;
        for (std::size_t i = a + 1; i < b; ++i) {
            const double d = project_to_arc(u[i], u[a], u[b]).distance;
            if (d > worst) {
                worst = d;
                at = i;
            }
        }
        if (worst > d_tol) {
            keep[at] = 1;
            stack.push_back({at, b});
            stack.push_back({a, at});
        }
    }
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < n; ++i)
        if (keep[i]) out.push_back(i);
    return out;
}

Vec3 Trajectory::unit_at_distance(double s) const {
    if (route_unit.size() == 1 || s <= 0) return route_unit.front();
    if (s >= cumdist.back()) return route_unit.back();
    const auto it = std::upper_bound(cumdist.begin(), cumdist.end(), s);
    const std::size_t k = static_cast<std::size_t>(it - cumdist.begin()) - 1;
    const double len = cumdist[k + 1] - cumdist[k];
    if (len <= 0) return route_unit[k];
    return slerp(route_unit[k], route_unit[k + 1], (s - cumdist[k]) / len);
}

LatLon Trajectory::position_at_distance(double s) const { return to_latlon(unit_at_distance(s)); }

double Trajectory::distance_at_time(double t) const {
    if (profile.empty() || t < start_time() || t > end_time())
        throw std::out_of_range("trajectory: time outside the modelled span");
    auto it = std::lower_bound(profile.begin(), profile.end(), t,
                               [](const SpeedSegment& seg, double x) { return seg.t_end < x; });
    if (it == profile.end()) it = std::prev(profile.end());
    const SpeedSegment& seg = *it;
    if (seg.t_end <= seg.t_begin) return seg.s_end;
    const double f = (t - seg.t_begin) / (seg.t_end - seg.t_begin);
    return seg.s_begin + f * (seg.s_end - seg.s_begin);
}

double Trajectory::time_at_distance(double s, double t_hint) const {
    s = std::clamp(s, profile.front().s_begin, profile.back().s_end);
    auto it = std::lower_bound(profile.begin(), profile.end(), s,
                               [](const SpeedSegment& seg, double x) { return seg.s_end < x; });
    double best = std::numeric_limits<double>::quiet_NaN();
    double best_gap = std::numeric_limits<double>::infinity();
    for (; it != profile.end() && it->s_begin <= s; ++it) {
        double t;
        if (it->s_end <= it->s_begin)
            t = std::clamp(t_hint, it->t_begin, it->t_end);
        else
            t = it->t_begin + (s - it->s_begin) / (it->s_end - it->s_begin) * (it->t_end - it->t_begin);
        if (std::abs(t - t_hint) < best_gap) {
            best_gap = std::abs(t - t_hint);
            best = t;
        }
    }
    if (std::isnan(best)) best = s <= profile.front().s_begin ? profile.front().t_begin : profile.back().t_end;
    return best;
}

ArcProjection route_projection(const Trajectory& traj, const LatLon& p, double* along) {
    const Vec3 v = to_unit(p);
    if (traj.route_unit.size() == 1) {
        if (along) *along = 0;
        return {central_angle(v, traj.route_unit[0]) * kEarthRadius, 0.0};
    }
    ArcProjection best{std::numeric_limits<double>::infinity(), 0.0};
    double best_s = 0;
    for (std::size_t k = 0; k + 1 < traj.route_unit.size(); ++k) {
        const ArcProjection pr = project_to_arc(v, traj.route_unit[k], traj.route_unit[k + 1]);
        if (pr.distance < best.distance) {
            best = pr;
            best_s = traj.cumdist[k] + pr.fraction * (traj.cumdist[k + 1] - traj.cumdist[k]);
        }
    }
    if (along) *along = best_s;
    return best;
}

std::vector<double> along_route_positions(const std::vector<LatLon>& pts, const Trajectory& route) {
    std::vector<double> s(pts.size(), 0.0);
    const auto& vm = route.vertex_message;
    for (std::size_t k = 0; k + 1 < vm.size(); ++k) {
        const double len = route.cumdist[k + 1] - route.cumdist[k];
        s[vm[k]] = route.cumdist[k];
        for (std::size_t i = vm[k] + 1; i < vm[k + 1]; ++i) {
            const auto pr = project_to_arc(to_unit(pts[i]), route.route_unit[k], route.route_unit[k + 1]);
            s[i] = route.cumdist[k] + pr.fraction * len;
        }
    }
    s[vm.back()] = route.cumdist.back();
    for (std::size_t i = 1; i < s.size(); ++i) s[i] = std::max(s[i], s[i - 1]);
    return s;
}

std::vector<SpeedSegment> fit_speed_profile(const std::vector<double>& s, const std::vector<double>& t, double rel_tol,
                                            double exempt_kn) {
    const std::size_t n = s.size();
    if (n < 2 || t.size() != n) throw std::invalid_argument("fit_speed_profile: need >= 2 matched samples");
    const double exempt = exempt_kn * kKnot;
    std::vector<SpeedSegment> out;
    std::size_t i0 = 0;
    double lo = -std::numeric_limits<double>::infinity(), hi = std::numeric_limits<double>::infinity();
    auto close = [&](std::size_t a, std::size_t b) { out.push_back({s[a], s[b], t[a], t[b]}); };
    for (std::size_t j = 1; j < n; ++j) {
        if (t[j] <= t[j - 1]) throw std::invalid_argument("fit_speed_profile: times must increase");
        const double u = (s[j] - s[j - 1]) / (t[j] - t[j - 1]);
        double lo2 = lo, hi2 = hi;
        if (u > exempt) {
            lo2 = std::max(lo, u * (1.0 - rel_tol));
            hi2 = std::min(hi, u * (1.0 + rel_tol));
        }
        const double v = (s[j] - s[i0]) / (t[j] - t[i0]);
        if (j == i0 + 1 || (v >= lo2 && v <= hi2)) {
            lo = lo2;
            hi = hi2;
            continue;
        }
        close(i0, j - 1);
        i0 = j - 1;
        lo = -std::numeric_limits<double>::infinity();
        hi = std::numeric_limits<double>::infinity();
        if (u > exempt) {
            lo = u * (1.0 - rel_tol);
            hi = u * (1.0 + rel_tol);
        }
    }
    close(i0, n - 1);
    return out;
}

Trajectory build_trajectory(const Leg& leg, double d_tol, double rel_tol) {
    Trajectory tr;
    tr.mmsi = leg.mmsi;
    std::vector<LatLon> pts;
    std::vector<double> ts;
    for (const auto& m : leg.messages) {
        pts.push_back(m.pos());
        ts.push_back(static_cast<double>(m.t));
    }
    tr.vertex_message = simplify_route(pts, d_tol);
    double acc = 0;
    for (std::size_t k = 0; k < tr.vertex_message.size(); ++k) {
        tr.route.push_back(pts[tr.vertex_message[k]]);
        tr.route_unit.push_back(to_unit(tr.route.back()));
        if (k > 0) acc += central_angle(tr.route_unit[k - 1], tr.route_unit[k]) * kEarthRadius;
        tr.cumdist.push_back(acc);
    }
    tr.profile = fit_speed_profile(along_route_positions(pts, tr), ts, rel_tol);
    return tr;
}

LatLon model_position_at(const Trajectory& traj, double t) { return traj.position_at_distance(traj.distance_at_time(t)); }

Quantiles quantiles(std::vector<double> v) {
    if (v.empty()) return {};
    std::sort(v.begin(), v.end());
    auto at = [&v](double q) {
        const double x = q * static_cast<double>(v.size() - 1);
        const std::size_t i = static_cast<std::size_t>(std::floor(x));
        if (i + 1 >= v.size()) return v.back();
        return v[i] + (x - static_cast<double>(i)) * (v[i + 1] - v[i]);
    };
    return {at(0.5), at(0.9)};
}

FidelityReport fidelity_report(const std::vector<Leg>& legs, const std::vector<Trajectory>& trajectories) {
    if (legs.size() != trajectories.size()) throw std::invalid_argument("fidelity_report: legs and trajectories differ in count");
    std::vector<double> pos, route, timing, rel_pos, rel_route, rel_time;
    for (std::size_t l = 0; l < legs.size(); ++l) {
        const auto& tr = trajectories[l];
        const double len = tr.length();
        const double dur = tr.end_time() - tr.start_time();
        for (const auto& m : legs[l].messages) {
            const double t = static_cast<double>(m.t);
            const double dp = central_angle(to_unit(m.pos()), tr.unit_at_distance(tr.distance_at_time(t))) * kEarthRadius;
            double along = 0;
            const double dr = route_projection(tr, m.pos(), &along).distance;
            const double dt = std::abs(tr.time_at_distance(along, t) - t);
            pos.push_back(dp);
            route.push_back(dr);
            timing.push_back(dt);
            if (len > 0) {
                rel_pos.push_back(dp / len);
                rel_route.push_back(dr / len);
            }
            if (dur > 0) rel_time.push_back(dt / dur);
        }
    }
    FidelityReport r;
    r.samples = pos.size();
    r.position = quantiles(pos);
    r.route = quantiles(route);
    r.timing = quantiles(timing);
    r.rel_position_median = quantiles(rel_pos).median;
    r.rel_route_median = quantiles(rel_route).median;
    r.rel_timing_median = quantiles(rel_time).median;
    return r;
}

std::string trajectory_to_geojson_feature(const Trajectory& traj) {
    nlohmann::ordered_json f;
    f["type"] = "Feature";
    nlohmann::ordered_json coords = nlohmann::json::array();
    for (const auto& p : traj.route) coords.push_back({p.lon, p.lat});
    f["geometry"] = {{"type", "LineString"}, {"coordinates", coords}};
    nlohmann::ordered_json prof = nlohmann::json::array();
    for (const auto& s : traj.profile)
        prof.push_back({{"s_begin", s.s_begin}, {"s_end", s.s_end}, {"t_begin", s.t_begin}, {"t_end", s.t_end}});
    f["properties"] = {{"mmsi", traj.mmsi}, {"cumdist_m", traj.cumdist}, {"vertex_message", traj.vertex_message},
                       {"speed_profile", prof}};
    return f.dump();
}

Trajectory trajectory_from_geojson_feature(const std::string& text) {
    const auto f = nlohmann::json::parse(text);
    Trajectory tr;
    const auto& props = f.at("properties");
    tr.mmsi = props.at("mmsi").get<Mmsi>();
    for (const auto& c : f.at("geometry").at("coordinates")) {
        tr.route.push_back({c.at(1).get<double>(), c.at(0).get<double>()});
        tr.route_unit.push_back(to_unit(tr.route.back()));
    }
    tr.cumdist = props.at("cumdist_m").get<std::vector<double>>();
    tr.vertex_message = props.at("vertex_message").get<std::vector<std::size_t>>();
    for (const auto& s : props.at("speed_profile"))
        tr.profile.push_back({s.at("s_begin").get<double>(), s.at("s_end").get<double>(), s.at("t_begin").get<double>(),
                              s.at("t_end").get<double>()});
    if (tr.route.empty() || tr.cumdist.size() != tr.route.size() || tr.profile.empty())
        throw std::invalid_argument("trajectory feature is inconsistent");
    return tr;
}

}  // namespace aisbay
