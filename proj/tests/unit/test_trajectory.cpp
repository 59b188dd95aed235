#include "helpers.hpp"

#include "aisbay/synth.hpp"
#include "aisbay/trajectory.hpp"

#include <doctest.h>

#include <cmath>

using namespace aisbay;
using testutil::pos;
using testutil::track;

namespace {

const LatLon kStart{35.2, 139.8};

// Spherical cross-track/along-track formulas; used only as a check on the projection code.
double cross_track_oracle(LatLon p, LatLon a, LatLon b) {
    const double d13 = sphere_distance(a, p) / kEarthRadius;
    const double d12 = sphere_distance(a, b) / kEarthRadius;
    const double dth = (initial_bearing(a, p) - initial_bearing(a, b)) * kDeg;
    const double xt = std::asin(std::sin(d13) * std::sin(dth));
    const double at = std::acos(std::clamp(std::cos(d13) / std::cos(xt), -1.0, 1.0));
    const bool ahead = std::cos(dth) > 0;
    if (ahead && at <= d12) return std::abs(xt) * kEarthRadius;
    return std::min(sphere_distance(a, p), sphere_distance(b, p));
}

double polyline_length(const std::vector<LatLon>& p) {
    double s = 0;
    for (std::size_t i = 1; i < p.size(); ++i) s += sphere_distance(p[i - 1], p[i]);
    return s;
}

Leg make_leg(std::vector<AisMessage> m) {
    Leg l;
    l.mmsi = m.front().mmsi;
    l.messages = std::move(m);
    finalize_leg(l);
    return l;
}

}  // namespace

TEST_CASE("route simplification") {
    std::vector<LatLon> line;
    for (int i = 0; i < 100; ++i) line.push_back(destination(kStart, 30, i * 50.0));
    CHECK(simplify_route(line).size() == 2);

    const LatLon a = kStart, b = destination(kStart, 90, 2000);
    const LatLon mid = destination(kStart, 90, 1000);
    CHECK(simplify_route({a, destination(mid, 0, 11), b}, 10).size() == 3);
    CHECK(simplify_route({a, destination(mid, 0, 9), b}, 10).size() == 2);
    CHECK_THROWS(simplify_route({a}));

    Rng rng(17);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<LatLon> walk{kStart};
        double brg = rng.uniform(0, 360);
        for (int i = 0; i < 300; ++i) {
            brg += rng.uniform(-20, 20);
            walk.push_back(destination(walk.back(), brg, rng.uniform(5, 60)));
        }
        const auto keep = simplify_route(walk);
        CHECK(keep.front() == 0);
        CHECK(keep.back() == walk.size() - 1);
        std::vector<LatLon> route;
        for (auto k : keep) route.push_back(walk[k]);
        CHECK(polyline_length(route) <= polyline_length(walk) + 1e-6);
        // every point within tolerance of the edge spanning it
        double worst = 0;
        for (std::size_t e = 0; e + 1 < keep.size(); ++e)
            for (std::size_t i = keep[e]; i <= keep[e + 1]; ++i)
                worst = std::max(worst, cross_track_oracle(walk[i], walk[keep[e]], walk[keep[e + 1]]));
        CHECK(worst <= kRouteTolerance + 1e-6);
    }
}

TEST_CASE("speed profile fitting") {
    auto st = [](const std::vector<double>& speeds_kn, double dt) {
        std::vector<double> s{0}, t{0};
        for (double v : speeds_kn) {
            s.push_back(s.back() + v * kKnot * dt);
            t.push_back(t.back() + dt);
        }
        return std::pair{s, t};
    };
    auto [s1, t1] = st(std::vector<double>(50, 10.0), 60);
    auto p = fit_speed_profile(s1, t1);
    REQUIRE(p.size() == 1);
    CHECK(p[0].speed() / kKnot == doctest::Approx(10.0));

    std::vector<double> halves(25, 10.0);
    halves.insert(halves.end(), 25, 20.0);
    auto [s2, t2] = st(halves, 60);
    p = fit_speed_profile(s2, t2);
    REQUIRE(p.size() == 2);
    CHECK(p[0].speed() / kKnot == doctest::Approx(10.0));
    CHECK(p[1].speed() / kKnot == doctest::Approx(20.0));

    std::vector<double> jitter;
    for (int i = 0; i < 60; ++i) jitter.push_back(10.0 + (i % 2 ? 0.2 : -0.2));
    auto [s3, t3] = st(jitter, 60);
    CHECK(fit_speed_profile(s3, t3).size() == 1);

    // random noise: each moving interval is reproduced by its segment within 5 %
    Rng rng(2);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> v;
        for (int i = 0; i < 80; ++i) v.push_back(rng.below(10) == 0 ? rng.uniform(0, 0.4) : rng.uniform(5, 25));
        auto [s, t] = st(v, 60);
        const auto prof = fit_speed_profile(s, t);
        CHECK(prof.front().t_begin == t.front());
        CHECK(prof.back().t_end == t.back());
        for (std::size_t k = 1; k < prof.size(); ++k) CHECK(prof[k].t_begin == prof[k - 1].t_end);
        for (std::size_t j = 1; j < s.size(); ++j) {
            const double u = (s[j] - s[j - 1]) / (t[j] - t[j - 1]);
            if (u <= 0.5 * kKnot) continue;
            const auto seg = std::find_if(prof.begin(), prof.end(), [&](const SpeedSegment& g) {
                return g.t_begin <= t[j - 1] && t[j] <= g.t_end;
            });
            REQUIRE(seg != prof.end());
            CHECK(std::abs(seg->speed() - u) <= 0.05 * u * (1 + 1e-12));
        }
    }
    CHECK_THROWS(fit_speed_profile({0, 1}, {0, 0}));
}

TEST_CASE("model position along the trajectory") {
    auto m = track(1, 1000, kStart, 60, 12, 40);
    const Trajectory tr = build_trajectory(make_leg(m));
    CHECK(tr.route.size() == 2);
    const LatLon p0 = model_position_at(tr, 1000);
    CHECK(sphere_distance(p0, m.front().pos()) < 1e-6);
    const double mid_t = (tr.start_time() + tr.end_time()) / 2;
    CHECK(sphere_distance(model_position_at(tr, mid_t), tr.position_at_distance(tr.length() / 2)) < 1e-3);
    CHECK_THROWS_AS(model_position_at(tr, 999), std::out_of_range);
    CHECK_THROWS_AS(model_position_at(tr, tr.end_time() + 1), std::out_of_range);

    // accelerating leg with turns: piecewise profile vs a fine-step numeric integration
    std::vector<AisMessage> leg;
    LatLon p = kStart;
    double brg = 10;
    for (int i = 0; i < 60; ++i) {
        leg.push_back(pos(2, i * 60, p, 0));
        brg += i % 15 == 0 ? 35 : 0;
        p = destination(p, brg, (4 + 0.3 * i) * kKnot * 60);
    }
    const Trajectory t2 = build_trajectory(make_leg(leg));
    CHECK(t2.profile.size() > 1);
    double s = 0;
    const double h = 0.05;
    auto speed_at = [&](double t) {
        for (const auto& seg : t2.profile)
            if (t >= seg.t_begin && t < seg.t_end) return seg.speed();
        return t2.profile.back().speed();
    };
    for (double t = t2.start_time(); t < t2.end_time() - 1e-9; t += h) {
        s += speed_at(t + h / 2) * h;
        if (std::fmod(t - t2.start_time() + h, 600.0) < h / 2) {
            const double tq = t + h;
            CHECK(sphere_distance(t2.position_at_distance(s), model_position_at(t2, tq)) < 1.0);
        }
    }
}

TEST_CASE("fidelity statistics") {
    // a model keeping every message reproduces them exactly
    std::vector<AisMessage> m;
    LatLon p = kStart;
    Rng rng(8);
    for (int i = 0; i < 40; ++i) {
        m.push_back(pos(3, i * 60, p));
        p = destination(p, rng.uniform(0, 90), rng.uniform(100, 400));
    }
    const Leg leg = make_leg(m);
    const Trajectory exact = build_trajectory(leg, 0.0, 0.0);
    auto r = fidelity_report({leg}, {exact});
    CHECK(r.samples == 40);
    CHECK(r.position.median < 1e-6);
    CHECK(r.route.median < 1e-6);
    CHECK(r.timing.median < 1e-6);

    // generated legs with 6-decimal coordinates
    const Scenario sc = random_scenario(12, 15);
    const auto so = generate(sc);
    std::vector<Leg> legs;
    std::vector<Trajectory> trs;
    for (const auto& [mmsi, seq] : group_by_vessel(so.messages))
        for (auto& l : clean_vessel(mmsi, seq, sc.geometry).legs) {
            trs.push_back(build_trajectory(l));
            legs.push_back(std::move(l));
        }
    REQUIRE(!legs.empty());
    r = fidelity_report(legs, trs);
    CHECK(r.route.median <= kRouteTolerance);
    for (const auto& q : {r.position, r.route, r.timing}) {
        CHECK(q.median >= 0);
        CHECK(q.p90 >= q.median);
    }
    CHECK(r.rel_position_median < 0.01);
    CHECK(r.rel_timing_median < 0.01);
    for (std::size_t i = 0; i < legs.size(); ++i)
        for (const auto& msg : legs[i].messages) CHECK(route_projection(trs[i], msg.pos()).distance <= kRouteTolerance + 1e-6);
}

TEST_CASE("trajectory GeoJSON round trip") {
    const Trajectory tr = build_trajectory(make_leg(track(4, 0, kStart, 200, 9, 30)));
    const Trajectory back = trajectory_from_geojson_feature(trajectory_to_geojson_feature(tr));
    CHECK(back.mmsi == tr.mmsi);
    REQUIRE(back.route.size() == tr.route.size());
    for (std::size_t i = 0; i < tr.route.size(); ++i) {
        CHECK(back.route[i].lat == tr.route[i].lat);
        CHECK(back.route[i].lon == tr.route[i].lon);
    }
    CHECK(back.cumdist == tr.cumdist);
    REQUIRE(back.profile.size() == tr.profile.size());
    CHECK(back.profile[0].t_end == tr.profile[0].t_end);
    CHECK_THROWS(trajectory_from_geojson_feature(R"({"type":"Feature","geometry":{"type":"LineString","coordinates":[]},"properties":{"mmsi":1,"cumdist_m":[],"vertex_message":[],"speed_profile":[]}})"));
}

TEST_CASE("quantiles") {
    const Quantiles q = quantiles({5, 1, 4, 2, 3});
    CHECK(q.median == 3);
    CHECK(q.p90 == doctest::Approx(4.6));
    CHECK(quantiles({}).median == 0);
}
