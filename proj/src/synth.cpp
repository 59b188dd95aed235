#include "aisbay/synth.hpp"

#include "aisbay/ingest.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace aisbay {

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    // splitmix64 finaliser over the combined words
    std::uint64_t z = a * 0x9E3779B97F4A7C15ULL + b + 0x632BE59BD9B4E019ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

Rng::Rng(std::uint64_t seed) : engine_(seed) {}

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * kPi * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * kPi * u2);
}

std::uint64_t Rng::below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("Rng::below: empty range");
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
    for (;;) {
        const std::uint64_t x = engine_();
        if (x < limit) return x % n;
    }
}

bool ReceiverModel::occluded(const LatLon& p) const {
    if (wedges.empty()) return false;
    const double r = sphere_distance(pos, p);
    const double az = initial_bearing(pos, p);
    for (const auto& w : wedges) {
        double d = std::fmod(std::abs(az - w.azimuth_deg), 360.0);
        if (d > 180) d = 360 - d;
        if (d <= w.half_angle_deg && r >= w.r_start_m) return true;
    }
    return false;
}

double ReceiverModel::drop_probability(const LatLon& p) const {
    const double r = sphere_distance(pos, p);
    if (r <= full_range_m) return 0.0;
    if (r >= zero_range_m) return 1.0;
    return (r - full_range_m) / (zero_range_m - full_range_m);
}

namespace {

double path_length(const std::vector<LatLon>& path) {
    double s = 0;
    for (std::size_t i = 1; i < path.size(); ++i) s += sphere_distance(path[i - 1], path[i]);
    return s;
}

LatLon along_path(const std::vector<LatLon>& path, double s) {
    for (std::size_t i = 1; i < path.size(); ++i) {
        const double seg = sphere_distance(path[i - 1], path[i]);
        if (s <= seg || i + 1 == path.size()) {
            const double f = seg > 0 ? std::clamp(s / seg, 0.0, 1.0) : 0.0;
            return to_latlon(slerp(to_unit(path[i - 1]), to_unit(path[i]), f));
        }
        s -= seg;
    }
    return path.back();
}

double round6(double x) { return std::round(x * 1e6) / 1e6; }

const char* kind_name(ActivityKind k) {
    switch (k) {
        case ActivityKind::Moor: return "moor";
        case ActivityKind::Move: return "move";
        case ActivityKind::Away: return "away";
    }
    return "?";
}

}  // namespace

void validate(const Scenario& s) {
    if (!(s.window.end > s.window.start)) throw std::invalid_argument("scenario: empty window");
    std::map<Mmsi, int> seen;
    for (const auto& v : s.fleet) {
        const std::string who = "vessel " + std::to_string(v.mmsi);
        if (v.mmsi < 100000000 || v.mmsi > 999999999) throw std::invalid_argument(who + ": MMSI out of range");
        if (seen[v.mmsi]++) throw std::invalid_argument(who + ": duplicate MMSI");
        if (v.acts.empty()) throw std::invalid_argument(who + ": empty schedule");
        Seconds t = s.window.start;
        for (const auto& a : v.acts) {
            if (a.start != t) throw std::invalid_argument(who + ": schedule has a gap or overlap at " + format_rfc3339(t));
            if (a.end <= a.start) throw std::invalid_argument(who + ": empty " + std::string(kind_name(a.kind)));
            t = a.end;
            if (a.kind == ActivityKind::Move) {
                if (a.path.size() < 2) throw std::invalid_argument(who + ": move needs a path");
                if ((a.end - a.start) % 60 != 0) throw std::invalid_argument(who + ": move duration not a whole minute");
                const double v_kn = path_length(a.path) / static_cast<double>(a.end - a.start) / kKnot;
                if (v_kn > s.max_speed_kn) throw std::invalid_argument(who + ": infeasible schedule, move exceeds maximum speed");
            }
            for (const auto& off : a.transceiver_off)
                if (a.kind != ActivityKind::Moor || off.start <= a.start || off.end >= a.end || off.end <= off.start)
                    throw std::invalid_argument(who + ": transceiver-off interval must lie inside a mooring");
            for (const auto& [ts, p] : a.strays)
                if (a.kind != ActivityKind::Away || ts <= a.start || ts >= a.end)
                    throw std::invalid_argument(who + ": stray report must lie inside an absence");
        }
        if (t != s.window.end) throw std::invalid_argument(who + ": schedule does not reach the window end");
    }
}

namespace {

struct Emitter {
    const Scenario& sc;
    const VesselScript& v;
    Rng rng;
    std::vector<AisMessage> out;
    LatLon last{std::nan(""), std::nan("")};

    Emitter(const Scenario& s, const VesselScript& vs) : sc(s), v(vs), rng(mix_seed(s.seed, static_cast<std::uint64_t>(vs.mmsi))) {}

    LatLon jitter(const LatLon& p) {
        for (int attempt = 0;; ++attempt) {
            LatLon q = p;
            if (sc.jitter_m > 0) {
                const double e = sc.jitter_m * rng.normal(), n = sc.jitter_m * rng.normal();
                q.lat += n / meridional_radius(p.lat) / kDeg;
                q.lon += e / (prime_vertical_radius(p.lat) * std::cos(p.lat * kDeg)) / kDeg;
            }
            q = {round6(q.lat), round6(q.lon)};
            if (!(q == last) || sc.jitter_m <= 0 || attempt > 50) return q;
        }
    }

    bool received(const LatLon& p, bool assured) {
        // draws happen unconditionally so the stream does not depend on the outcome
        const double u = rng.uniform();
        if (assured) return true;
        if (sc.receiver.occluded(p)) return false;
        return u >= sc.receiver.drop_probability(p);
    }

    // returns the index of the emitted message or -1
    long position(Seconds t, const LatLon& p, double sog, bool assured) {
        const LatLon q = jitter(p);
        if (!sc.window.contains(t) || !received(q, assured)) return -1;
        AisMessage m;
        m.mmsi = v.mmsi;
        m.t = t;
        m.lat = q.lat;
        m.lon = q.lon;
        m.sog = std::round(sog * 10.0) / 10.0;
        m.kind = ReportKind::Position;
        m.nav_status = sog > 0.5 ? 0 : 5;
        out.push_back(m);
        last = q;
        return static_cast<long>(out.size()) - 1;
    }

    void static_report(Seconds t, const LatLon& where, const std::string& dest) {
        if (!v.ship_type) return;
        if (!received(where, false) || !sc.window.contains(t)) return;
        AisMessage m;
        m.mmsi = v.mmsi;
        m.t = t;
        m.lat = m.lon = std::nan("");
        m.kind = ReportKind::Static;
        m.destination = dest;
        m.ship_type = v.ship_type;
        m.imo = v.imo;
        out.push_back(m);
    }
};

bool off_at(const Activity& a, Seconds t) {
    return std::any_of(a.transceiver_off.begin(), a.transceiver_off.end(),
                       [t](const TimeWindow& w) { return t >= w.start && t <= w.end; });
}

struct MoveMessages {
    std::vector<long> idx;  // emitted message indices of the move, in order
};

}  // namespace

SynthOutput generate(const Scenario& s) {
    validate(s);
    SynthOutput res;
    GroundTruth& truth = res.truth;
    truth.window = s.window;
    truth.berths = s.berths;
    truth.receiver = s.receiver.pos;

    for (const auto& v : s.fleet) {
        Emitter em(s, v);
        std::vector<MoveMessages> moves(v.acts.size());
        std::string dest;
        for (std::size_t k = 0; k < v.acts.size(); ++k) {
            const Activity& a = v.acts[k];
            const bool prev_moor = k > 0 && v.acts[k - 1].kind == ActivityKind::Moor;
            const bool next_moor = k + 1 < v.acts.size() && v.acts[k + 1].kind == ActivityKind::Moor;
            switch (a.kind) {
                case ActivityKind::Moor: {
                    const bool after_move = k > 0 && v.acts[k - 1].kind == ActivityKind::Move;
                    for (Seconds t = a.start + (after_move ? 360 : 0); t < a.end; t += 360)
                        if (!off_at(a, t)) em.position(t, a.pos, 0.0, false);
                    for (Seconds t = a.start + 180; t < a.end; t += 360)
                        if (!off_at(a, t)) em.static_report(t, a.pos, dest);
                    break;
                }
                case ActivityKind::Move: {
                    dest = a.destination;
                    const double L = path_length(a.path);
                    const Seconds dur = a.end - a.start;
                    const double speed = L / static_cast<double>(dur);
                    const Seconds steps = dur / 60;
                    for (Seconds j = 0; j <= steps; ++j) {
                        const Seconds t = a.start + 60 * j;
                        const bool assured = (j == 0 && prev_moor) || (j == steps && next_moor);
                        const LatLon p = along_path(a.path, speed * static_cast<double>(60 * j));
                        const long i = em.position(t, p, speed / kKnot, assured);
                        if (i >= 0) moves[k].idx.push_back(i);
                        if (j == 0 && steps > 0) em.static_report(t + 30, p, dest);
                    }
                    break;
                }
                case ActivityKind::Away:
                    for (const auto& [t, p] : a.strays) em.position(t, p, 12.0, true);
                    break;
            }
        }
        std::vector<AisMessage>& msgs = em.out;

        // observed legs: the in-bay part of every move
        const bool moves_at_all = std::any_of(v.acts.begin(), v.acts.end(), [](const Activity& a) { return a.kind == ActivityKind::Move; });
        if (!moves_at_all) {
            truth.excluded.push_back(v.mmsi);
            res.messages.insert(res.messages.end(), msgs.begin(), msgs.end());
            continue;
        }
        truth.vessels.push_back(v.mmsi);
        struct ObsLeg {
            std::size_t act;
            Leg leg;
        };
        std::vector<ObsLeg> legs;
        for (std::size_t k = 0; k < v.acts.size(); ++k) {
            if (v.acts[k].kind != ActivityKind::Move) continue;
            ObsLeg ol{k, {}};
            ol.leg.mmsi = v.mmsi;
            for (long i : moves[k].idx)
                if (s.geometry.in_roi(msgs[i].pos())) ol.leg.messages.push_back(msgs[i]);
            if (ol.leg.messages.size() < 2) continue;
            finalize_leg(ol.leg);
            truth.legs.push_back({v.mmsi, ol.leg.start(), ol.leg.end()});
            legs.push_back(std::move(ol));
        }
        std::stable_sort(msgs.begin(), msgs.end(), [](const AisMessage& a, const AisMessage& b) { return a.t < b.t; });
        const std::vector<Seconds> evidence = gap_evidence_times(msgs, s.geometry);
        auto away_between = [&](std::size_t a0, std::size_t a1) {
            for (std::size_t k = a0; k < a1 && k < v.acts.size(); ++k)
                if (v.acts[k].kind == ActivityKind::Away) return true;
            return false;
        };
        // reuse the timeline machinery for interval conventions and message counts
        VesselTimeline tl;
        tl.mmsi = v.mmsi;
        for (const auto& ol : legs) tl.legs.push_back(ol.leg);
        const auto rule = classify_timeline(tl, evidence, s.geometry, s.truth_policy, s.window);
        for (const auto& g : rule) {
            std::size_t a0 = 0, a1 = v.acts.size();
            for (const auto& ol : legs) {
                if (!g.opens_window && ol.leg.end() == g.start) a0 = ol.act + 1;
                if (!g.closes_window && ol.leg.start() == g.end) a1 = ol.act;
            }
            TruthGap tg;
            tg.mmsi = v.mmsi;
            tg.start = g.start;
            tg.end = g.end;
            tg.opens_window = g.opens_window;
            tg.closes_window = g.closes_window;
            tg.messages = g.message_count;
            tg.verdict = away_between(a0, a1) ? Verdict::Absent : Verdict::Moored;
            tg.rule_conforming = tg.verdict == g.verdict;
            truth.gaps.push_back(tg);
            if (tg.verdict == Verdict::Absent) {
                if (!tg.opens_window) truth.transits.push_back({v.mmsi, tg.start, Direction::Out});
                if (!tg.closes_window) truth.transits.push_back({v.mmsi, tg.end, Direction::In});
            }
        }
        res.messages.insert(res.messages.end(), msgs.begin(), msgs.end());
    }
    std::stable_sort(res.messages.begin(), res.messages.end(), [](const AisMessage& a, const AisMessage& b) {
        return a.t != b.t ? a.t < b.t : a.mmsi < b.mmsi;
    });
    std::sort(truth.transits.begin(), truth.transits.end(), [](const TruthTransit& a, const TruthTransit& b) {
        return a.t != b.t ? a.t < b.t : a.mmsi != b.mmsi ? a.mmsi < b.mmsi : a.direction < b.direction;
    });
    return res;
}

// ---------------------------------------------------------------------------------------------
// scenario construction

namespace {

constexpr double kRoiSouth = 35.00, kRoiNorth = 35.60, kRoiWest = 139.70, kRoiEast = 139.90;
constexpr double kOutsideLat = 34.96;
constexpr double kWestShore = 139.72, kEastShore = 139.88;

Polygon rect(double lat0, double lat1, double lon0, double lon1) {
    return Polygon({{lat0, lon0}, {lat0, lon1}, {lat1, lon1}, {lat1, lon0}});
}

std::vector<Berth> reference_berths() {
    std::vector<Berth> b;
    const double lats[] = {35.20, 35.28, 35.36, 35.44, 35.52};
    for (int i = 0; i < 5; ++i) b.push_back({"W" + std::to_string(i + 1), {lats[i], kWestShore + 0.0018}, true});
    for (int i = 0; i < 5; ++i) b.push_back({"E" + std::to_string(i + 1), {lats[i], kEastShore - 0.0018}, true});
    b.push_back({"A1", {35.37, 139.80}, false});
    b.push_back({"A2", {35.25, 139.79}, false});
    b.push_back({"A3", {35.50, 139.82}, false});
    b.push_back({"A4", {35.13, 139.81}, false});
    return b;
}

ReceiverModel reference_receiver() {
    ReceiverModel r;
    r.pos = {35.62, 139.80};
    r.height_m = 40;
    r.wedges = {{176.0, 1.0, 5000.0}, {185.0, 1.0, 5000.0}};
    return r;
}

Seconds round_up_minute(double s) { return static_cast<Seconds>(std::ceil(s / 60.0 - 1e-9)) * 60; }

class Builder {
public:
    Builder(VesselScript& v, const TimeWindow& w) : v_(v), w_(w), t_(w.start) {}

    Seconds now() const { return t_; }
    const LatLon& pos() const { return pos_; }
    bool away() const { return away_; }

    void start_moored(const LatLon& p) {
        pos_ = p;
        away_ = false;
    }
    void start_away() { away_ = true; }

    void moor_until(Seconds t, std::vector<TimeWindow> off = {}) {
        t = std::min(t, w_.end);
        if (t <= t_) return;
        std::vector<TimeWindow> kept;
        for (auto o : off) {
            o.end = std::min(o.end, t - 1);
            if (o.end > o.start) kept.push_back(o);
        }
        off = std::move(kept);
        Activity a;
        a.kind = ActivityKind::Moor;
        a.start = t_;
        a.end = t;
        a.pos = pos_;
        a.transceiver_off = std::move(off);
        v_.acts.push_back(a);
        t_ = t;
    }
    void away_until(Seconds t, std::vector<std::pair<Seconds, LatLon>> strays = {}) {
        t = std::min(t, w_.end);
        if (t <= t_) return;
        strays.erase(std::remove_if(strays.begin(), strays.end(), [t](const auto& x) { return x.first >= t; }), strays.end());
        Activity a;
        a.kind = ActivityKind::Away;
        a.start = t_;
        a.end = t;
        a.strays = std::move(strays);
        v_.acts.push_back(a);
        t_ = t;
    }
    // Duration of a move along `waypoints` (starting at the current position) at `speed_kn`.
    Seconds move_duration(const std::vector<LatLon>& waypoints, double speed_kn) const {
        std::vector<LatLon> path{pos_};
        path.insert(path.end(), waypoints.begin(), waypoints.end());
        return round_up_minute(path_length(path) / (speed_kn * kKnot));
    }
    void move(const std::vector<LatLon>& waypoints, double speed_kn, const std::string& dest, bool ends_outside = false) {
        Activity a;
        a.kind = ActivityKind::Move;
        a.path.push_back(pos_);
        a.path.insert(a.path.end(), waypoints.begin(), waypoints.end());
        a.speed_kn = speed_kn;
        a.destination = dest;
        a.start = t_;
        a.end = t_ + move_duration(waypoints, speed_kn);
        v_.acts.push_back(a);
        t_ = a.end;
        pos_ = a.path.back();
        away_ = ends_outside;
    }
    void enter_at(const LatLon& outside) { pos_ = outside; }
    void finish() {
        if (away_)
            away_until(w_.end);
        else
            moor_until(w_.end);
    }

private:
    VesselScript& v_;
    TimeWindow w_;
    Seconds t_;
    LatLon pos_;
    bool away_ = true;
};

std::vector<LatLon> lane_route(const LatLon& from, const LatLon& to, double lane) {
    std::vector<LatLon> r;
    if (std::abs(from.lon - lane) > 1e-9) r.push_back({from.lat, lane});
    if (std::abs(to.lat - from.lat) > 1e-9) r.push_back({to.lat, lane});
    r.push_back(to);
    return r;
}

std::vector<LatLon> exit_route(const LatLon& from, double lane) {
    std::vector<LatLon> r;
    if (std::abs(from.lon - lane) > 1e-9) r.push_back({from.lat, lane});
    r.push_back({kOutsideLat, lane});
    return r;
}

Seconds hours(double h) { return static_cast<Seconds>(std::llround(h * 3600.0 / 60.0)) * 60; }

struct GenericOptions {
    double min_entry_h = 50;         // first entry after the window start
    double final_exit_margin_h = 50; // last exit before the window end
    double moor_min_h = 6, moor_max_h = 60;
    double away_min_h = 8, away_max_h = 72;
    double speed_min = 8, speed_max = 14;
    double p_start_moored = 0.3;
    double p_shift = 0.4;             // move to a second berth before leaving
    double p_off = 0.0;               // transceiver off for a whole mooring
    double off_min_h = 1, off_max_h = 60;
};

void generic_vessel(VesselScript& v, const TimeWindow& w, const std::vector<Berth>& berths, Rng& rng, const GenericOptions& o) {
    Builder b(v, w);
    const Seconds last_exit = w.end - hours(o.final_exit_margin_h);
    auto pick_berth = [&]() -> const Berth& { return berths[rng.below(berths.size())]; };
    auto lane = [&] { return std::round(rng.uniform(139.76, 139.84) * 1e4) / 1e4; };
    auto moor_for = [&](double h_min, double h_max) {
        const Seconds d = hours(rng.uniform(h_min, h_max));
        if (o.p_off > 0 && rng.bernoulli(o.p_off)) {
            const Seconds off = hours(rng.uniform(o.off_min_h, o.off_max_h));
            b.moor_until(b.now() + off + 120, {{b.now() + 1, b.now() + off + 119}});
        } else {
            b.moor_until(b.now() + d);
        }
    };
    if (rng.bernoulli(o.p_start_moored)) {
        const Berth& first = pick_berth();
        b.start_moored(first.pos);
        moor_for(o.moor_min_h, o.moor_max_h);
    } else {
        b.start_away();
        b.away_until(w.start + hours(o.min_entry_h + rng.uniform(0, 96)));
    }
    for (int visit = 0; visit < 8; ++visit) {
        if (b.away()) {
            const Berth& target = pick_berth();
            const double ln = lane();
            b.enter_at({kOutsideLat, ln});
            const double sp = rng.uniform(o.speed_min, o.speed_max);
            const auto route = lane_route({kOutsideLat, ln}, target.pos, ln);
            // need room for arrival, a mooring and the way out before the exit deadline
            if (b.now() + b.move_duration(route, sp) + hours(o.moor_min_h + 4) > last_exit) break;
            b.move(route, sp, target.id);
            moor_for(o.moor_min_h, o.moor_max_h);
        }
        if (rng.bernoulli(o.p_shift)) {
            const Berth& next = pick_berth();
            if (!(next.pos == b.pos())) {
                const double sp = rng.uniform(o.speed_min, o.speed_max);
                const auto route = lane_route(b.pos(), next.pos, lane());
                if (b.now() + b.move_duration(route, sp) + hours(o.moor_min_h + 4) < last_exit) {
                    b.move(route, sp, next.id);
                    moor_for(o.moor_min_h, o.moor_max_h);
                }
            }
        }
        const double sp = rng.uniform(o.speed_min, o.speed_max);
        const auto out = exit_route(b.pos(), lane());
        if (b.now() + b.move_duration(out, sp) > last_exit) break;
        b.move(out, sp, "SEA", true);
        const Seconds back = b.now() + hours(rng.uniform(o.away_min_h, o.away_max_h));
        if (back > last_exit - hours(o.moor_min_h + 8)) break;
        b.away_until(back);
    }
    b.finish();
}

int random_ship_type(Rng& rng, std::optional<std::int64_t>& imo, std::optional<double>& gt, Mmsi mmsi, bool& has_type) {
    const double u = rng.uniform();
    int type = 0;
    has_type = true;
    if (u < 0.40)
        type = 70 + static_cast<int>(rng.below(10));
    else if (u < 0.60)
        type = 80 + static_cast<int>(rng.below(10));
    else if (u < 0.75)
        type = 52;
    else if (u < 0.80)
        type = 55;
    else if (u < 0.90)
        type = 30;
    else
        has_type = false;
    if (has_type && type >= 70) {
        imo = 9000000 + (mmsi % 1000000);
        if (rng.bernoulli(0.8)) gt = std::round(std::exp(rng.uniform(std::log(1000.0), std::log(60000.0))));
    }
    return type;
}

}  // namespace

Geometry reference_geometry() {
    Geometry g;
    g.roi = rect(kRoiSouth, kRoiNorth, kRoiWest, kRoiEast);
    TransitArea main{0, "main", rect(kRoiSouth, 35.05, kRoiWest, kRoiEast), 0.0};
    g.areas.push_back(main);
    for (int k = 1; k <= 10; ++k) {
        const double lo = 35.05 + 0.04 * (k - 1), hi = lo + 0.04;
        g.areas.push_back({k, std::to_string(k), rect(lo, hi, kRoiWest, kRoiEast), k == 1 ? 12.0 : 48.0});
    }
    g.land.push_back(rect(35.15, 35.65, 139.60, kWestShore));
    g.land.push_back(rect(35.15, 35.65, kEastShore, 139.98));
    return g;
}

Scenario reference_scenario(std::uint64_t seed) {
    Scenario s;
    s.seed = seed;
    s.geometry = reference_geometry();
    s.window.start = parse_rfc3339("2024-04-01T00:00:00Z");
    s.window.end = s.window.start + 14 * kDay;
    s.berths = reference_berths();
    s.receiver = reference_receiver();
    Rng rng(mix_seed(seed, 0xB0A7));
    const TimeWindow w = s.window;
    auto berth = [&](const std::string& id) -> const Berth& {
        for (const auto& b : s.berths)
            if (b.id == id) return b;
        throw std::logic_error("unknown berth " + id);
    };
    Mmsi next_mmsi = 431000001;

    // a vessel that never moves
    {
        VesselScript v;
        v.mmsi = next_mmsi++;
        v.ship_type = 70;
        v.imo = 9100001;
        v.gross_tonnage = 4000;
        Builder b(v, w);
        b.start_moored({35.56, 139.85});
        b.finish();
        s.fleet.push_back(v);
    }
    // ferries shuttling across the bay, each with one excursion to sea
    for (int f = 0; f < 6; ++f) {
        VesselScript v;
        v.mmsi = next_mmsi++;
        v.ship_type = 60;
        v.imo = 9200001 + f;
        v.gross_tonnage = 3000 + 1500 * f;
        const int pair = f % 5 + 1;
        const Berth& west = berth("W" + std::to_string(pair));
        const Berth& east = berth("E" + std::to_string(pair));
        Builder b(v, w);
        b.start_moored(west.pos);
        b.moor_until(w.start + hours(1 + 0.5 * f));
        const Seconds excursion = w.start + hours(5 * 24 + 6 * f);
        bool excursion_done = false;
        bool at_west = true;
        for (;;) {
            if (!excursion_done && b.now() >= excursion) {
                const double ln = 139.78 + 0.01 * f;
                b.move(exit_route(b.pos(), ln), 30.0, "SEA", true);
                b.away_until(b.now() + hours(6));
                b.enter_at({kOutsideLat, ln});
                const Berth& home = at_west ? west : east;
                b.move(lane_route({kOutsideLat, ln}, home.pos, ln), 30.0, home.id);
                b.moor_until(b.now() + hours(2));
                excursion_done = true;
                continue;
            }
            const Berth& to = at_west ? east : west;
            if (b.now() + b.move_duration({to.pos}, 30.0) + hours(2) > w.end - hours(1)) break;
            b.move({to.pos}, 30.0, to.id);
            at_west = !at_west;
            b.moor_until(b.now() + hours(2) + 360 * static_cast<Seconds>(rng.below(10)));
        }
        b.finish();
        s.fleet.push_back(v);
    }
    // a mooring with the transceiver off for 47 h, approached and left at 10 kn
    {
        VesselScript v;
        v.mmsi = next_mmsi++;
        v.ship_type = 79;
        v.imo = 9300001;
        v.gross_tonnage = 25000;
        Builder b(v, w);
        b.start_away();
        b.away_until(w.start + hours(60));
        const double ln = 139.78;
        b.enter_at({kOutsideLat, ln});
        const LatLon anchor{35.35, 139.78};
        b.move(lane_route({kOutsideLat, ln}, anchor, ln), 10.0, "A-8");
        const Seconds t = b.now();
        b.moor_until(t + hours(47), {{t + 1, t + hours(47) - 1}});
        b.move(lane_route(anchor, berth("W3").pos, ln), 10.0, "W3");
        b.moor_until(b.now() + hours(20));
        b.move(exit_route(b.pos(), ln), 12.0, "SEA", true);
        b.finish();
        s.fleet.push_back(v);
    }
    // a 50 h absence with two stray reports received meanwhile
    {
        VesselScript v;
        v.mmsi = next_mmsi++;
        v.ship_type = 71;
        v.imo = 9300002;
        v.gross_tonnage = 18000;
        Builder b(v, w);
        b.start_away();
        b.away_until(w.start + hours(55));
        const double ln = 139.82;
        b.enter_at({kOutsideLat, ln});
        b.move(lane_route({kOutsideLat, ln}, berth("E2").pos, ln), 12.0, "E2");
        b.moor_until(b.now() + hours(30));
        b.move(exit_route(b.pos(), ln), 12.0, "SEA", true);
        const Seconds out = b.now();
        b.away_until(out + hours(50) + 1800, {{out + hours(10), {35.02, 139.80}}, {out + hours(30), {35.03, 139.81}}});
        b.enter_at({kOutsideLat, ln});
        b.move(lane_route({kOutsideLat, ln}, berth("E4").pos, ln), 12.0, "E4");
        b.moor_until(b.now() + hours(24));
        b.move(exit_route(b.pos(), ln), 12.0, "SEA", true);
        b.finish();
        s.fleet.push_back(v);
    }
    // general traffic
    std::vector<Berth> targets = s.berths;
    while (s.fleet.size() < 50) {
        VesselScript v;
        v.mmsi = next_mmsi++;
        Rng vr(mix_seed(seed, static_cast<std::uint64_t>(v.mmsi) ^ 0x5EED));
        bool has_type = false;
        const int type = random_ship_type(vr, v.imo, v.gross_tonnage, v.mmsi, has_type);
        if (has_type) v.ship_type = type;
        GenericOptions o;
        if (type == 52 || type == 55) {
            o.moor_min_h = 3;
            o.moor_max_h = 24;
            o.p_shift = 0.8;
            o.speed_min = 6;
            o.speed_max = 10;
        }
        generic_vessel(v, w, targets, vr, o);
        s.fleet.push_back(v);
    }
    return s;
}

Scenario random_scenario(std::uint64_t seed, std::size_t vessels) {
    Scenario s;
    s.seed = seed;
    s.geometry = reference_geometry();
    s.window.start = parse_rfc3339("2024-06-01T00:00:00Z");
    s.window.end = s.window.start + 8 * kDay;
    s.berths = reference_berths();
    s.receiver = reference_receiver();
    Rng rng(mix_seed(seed, 0xA11));
    // anchorages spread over the area cascade so policy choice matters
    std::vector<Berth> targets = s.berths;
    for (int k = 0; k < 6; ++k)
        targets.push_back({"R" + std::to_string(k), {rng.uniform(35.06, 35.58), rng.uniform(139.75, 139.85)}, false});
    for (std::size_t i = 0; i < vessels; ++i) {
        VesselScript v;
        v.mmsi = 440000001 + static_cast<Mmsi>(i);
        Rng vr(mix_seed(seed, static_cast<std::uint64_t>(v.mmsi)));
        bool has_type = false;
        const int type = random_ship_type(vr, v.imo, v.gross_tonnage, v.mmsi, has_type);
        if (has_type) v.ship_type = type;
        GenericOptions o;
        o.min_entry_h = 1;
        o.final_exit_margin_h = 6;
        o.moor_min_h = 2;
        o.moor_max_h = 40;
        o.away_min_h = 2;
        o.away_max_h = 40;
        o.speed_min = 5;
        o.speed_max = 30;
        o.p_start_moored = 0.5;
        o.p_off = 0.5;
        o.off_min_h = 0.5;
        o.off_max_h = 70;
        generic_vessel(v, s.window, targets, vr, o);
        s.fleet.push_back(v);
    }
    s.berths = targets;
    return s;
}

void write_ndjson(std::ostream& out, const std::vector<AisMessage>& messages) {
    for (const auto& m : messages) out << serialize_record(m) << '\n';
}

std::string truth_to_json(const GroundTruth& t) {
    using J = nlohmann::ordered_json;
    J j;
    j["window"] = {{"start", format_rfc3339(t.window.start)}, {"end", format_rfc3339(t.window.end)}};
    j["vessels"] = t.vessels;
    j["excluded"] = t.excluded;
    j["receiver"] = {{"lat", t.receiver.lat}, {"lon", t.receiver.lon}};
    J legs = J::array();
    for (const auto& l : t.legs) legs.push_back({{"mmsi", l.mmsi}, {"start", l.start}, {"end", l.end}});
    j["legs"] = legs;
    J gaps = J::array();
    for (const auto& g : t.gaps)
        gaps.push_back({{"mmsi", g.mmsi},
                        {"start", g.start},
                        {"end", g.end},
                        {"opens_window", g.opens_window},
                        {"closes_window", g.closes_window},
                        {"verdict", verdict_name(g.verdict)},
                        {"rule_conforming", g.rule_conforming},
                        {"messages", g.messages}});
    j["gaps"] = gaps;
    J tr = J::array();
    for (const auto& e : t.transits)
        tr.push_back({{"mmsi", e.mmsi}, {"t", e.t}, {"direction", e.direction == Direction::In ? "in" : "out"}});
    j["transits"] = tr;
    J berths = J::array();
    for (const auto& b : t.berths)
        berths.push_back({{"id", b.id}, {"lat", b.pos.lat}, {"lon", b.pos.lon}, {"shore", b.shore}});
    j["berths"] = berths;
    return j.dump(1);
}

GroundTruth truth_from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    GroundTruth t;
    t.window.start = parse_rfc3339(j.at("window").at("start").get<std::string>());
    t.window.end = parse_rfc3339(j.at("window").at("end").get<std::string>());
    t.vessels = j.at("vessels").get<std::vector<Mmsi>>();
    t.excluded = j.at("excluded").get<std::vector<Mmsi>>();
    t.receiver = {j.at("receiver").at("lat").get<double>(), j.at("receiver").at("lon").get<double>()};
    for (const auto& l : j.at("legs")) t.legs.push_back({l.at("mmsi").get<Mmsi>(), l.at("start").get<Seconds>(), l.at("end").get<Seconds>()});
    for (const auto& g : j.at("gaps")) {
        TruthGap x;
        x.mmsi = g.at("mmsi").get<Mmsi>();
        x.start = g.at("start").get<Seconds>();
        x.end = g.at("end").get<Seconds>();
        x.opens_window = g.at("opens_window").get<bool>();
        x.closes_window = g.at("closes_window").get<bool>();
        x.verdict = g.at("verdict").get<std::string>() == "absent" ? Verdict::Absent : Verdict::Moored;
        x.rule_conforming = g.at("rule_conforming").get<bool>();
        x.messages = g.at("messages").get<std::size_t>();
        t.gaps.push_back(x);
    }
    for (const auto& e : j.at("transits"))
        t.transits.push_back({e.at("mmsi").get<Mmsi>(), e.at("t").get<Seconds>(),
                              e.at("direction").get<std::string>() == "in" ? Direction::In : Direction::Out});
    for (const auto& b : j.at("berths"))
        t.berths.push_back({b.at("id").get<std::string>(), {b.at("lat").get<double>(), b.at("lon").get<double>()}, b.at("shore").get<bool>()});
    return t;
}

void write_gt_csv(std::ostream& out, const Scenario& s) {
    out << "mmsi,imo,gt\n";
    for (const auto& v : s.fleet) {
        if (!v.gross_tonnage) continue;
        out << v.mmsi << ',' << (v.imo ? std::to_string(*v.imo) : std::string()) << ',' << *v.gross_tonnage << '\n';
    }
}

std::vector<ShadowSegment> generate_shadow_segments(const LatLon& receiver, const std::vector<ShadowWedge>& wedges,
                                                    const ShadowNoise& noise, Rng& rng, const std::string& association) {
    std::vector<ShadowSegment> out;
    int k = 0;
    for (const auto& w : wedges) {
        if (!(w.half_angle_deg < 90)) throw std::invalid_argument("shadow wedge must subtend less than 180 degrees");
        const double r1 = rng.uniform(noise.r_near_min_m, noise.r_near_max_m);
        const double len = rng.uniform(noise.length_min_m, noise.length_max_m);
        const double delta = noise.angle_sd_deg * rng.normal();
        const LatLon mid = destination(receiver, w.azimuth_deg, r1 + 0.5 * len);
        const LatLon far = destination(receiver, w.azimuth_deg, r1 + len);
        const double b = initial_bearing(mid, far);
        ShadowSegment s;
        s.id = std::to_string(++k);
        s.receiver = association;
        s.b = destination(mid, b + delta, 0.5 * len);
        s.a = destination(mid, b + 180.0 + delta, 0.5 * len);
        out.push_back(s);
    }
    return out;
}

namespace {

void frame_of(const Vec3& mean, Vec3& e1, Vec3& e2) {
    const Vec3 helper = std::abs(mean.z()) < 0.9 ? Vec3::UnitZ() : Vec3::UnitX();
    e1 = helper.cross(mean).normalized();
    e2 = mean.cross(e1).normalized();
}

}  // namespace

Vec3 sample_vmf(const Vec3& mean, double kappa, Rng& rng) {
    if (!(kappa > 0)) throw std::invalid_argument("vmf: kappa must be positive");
    const double u = 1.0 - rng.uniform();
    const double w = 1.0 + std::log(u + (1.0 - u) * std::exp(-2.0 * kappa)) / kappa;
    const double phi = 2.0 * kPi * rng.uniform();
    Vec3 e1, e2;
    const Vec3 m = mean.normalized();
    frame_of(m, e1, e2);
    const double s = std::sqrt(std::max(0.0, 1.0 - w * w));
    return (w * m + s * (std::cos(phi) * e1 + std::sin(phi) * e2)).normalized();
}

Vec3 sample_kent(const Vec3& mean, const Vec3& major, double kappa, double beta, Rng& rng) {
    if (!(kappa >= 100)) throw std::invalid_argument("kent sampler: kappa must be at least 100");
    if (!(beta >= 0 && 2 * beta < kappa)) throw std::invalid_argument("kent sampler: need 0 <= 2 beta < kappa");
    const Vec3 g1 = mean.normalized();
    const Vec3 g2 = (major - major.dot(g1) * g1).normalized();
    const Vec3 g3 = g1.cross(g2);
    const double s2 = 1.0 / std::sqrt(kappa - 2 * beta), s3 = 1.0 / std::sqrt(kappa + 2 * beta);
    auto h = [kappa](double x) { return kappa * (std::sqrt(1 - x) - 1 + 0.5 * x) - 0.5 * std::log(1 - x); };
    const double root = 0.5 * (kappa - std::sqrt(kappa * kappa - 4 * kappa));
    const double hmax = std::max(0.0, h(1 - 1 / (root * root)));
    for (;;) {
        const double y2 = s2 * rng.normal(), y3 = s3 * rng.normal();
        const double r2 = y2 * y2 + y3 * y3;
        if (r2 >= 0.5) continue;
        if (std::log(1.0 - rng.uniform()) > h(r2) - hmax) continue;
        return (std::sqrt(1 - r2) * g1 + y2 * g2 + y3 * g3).normalized();
    }
}

}  // namespace aisbay
