#include "aisbay/clean.hpp"

#include "aisbay/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace aisbay {

const char* removal_reason_name(RemovalReason r) {
    switch (r) {
        case RemovalReason::StaticVessel: return "static_vessel";
        case RemovalReason::NoPositionFix: return "no_position_fix";
        case RemovalReason::OutsideRoi: return "outside_roi";
        case RemovalReason::Duplicate: return "duplicate";
        case RemovalReason::Kinematic: return "kinematic";
        case RemovalReason::Isolated: return "isolated";
        case RemovalReason::TransitAreaOnly: return "transit_area_only";
        case RemovalReason::Merge: return "merge";
    }
    return "unknown";
}

PointKinematics point_kinematics(const AisMessage& prev, const AisMessage& cur, const AisMessage& next) {
    PointKinematics k;
    k.t1 = static_cast<double>(cur.t - prev.t);
    k.t2 = static_cast<double>(next.t - cur.t);
    if (k.t1 <= 0 || k.t2 <= 0) throw std::invalid_argument("point_kinematics: non-increasing timestamps");
    k.d1 = geodesic_distance(prev.pos(), cur.pos());
    k.d2 = geodesic_distance(cur.pos(), next.pos());
    k.speed = k.d1 / k.t1;
    k.accel = std::abs(k.d2 / k.t2 - k.d1 / k.t1) / ((k.t1 + k.t2) / 2.0);
    return k;
}

double rounding_accel_spike(int n, double dd_m, double dt1_s) {
    if (n < 1 || dt1_s <= 0) throw std::invalid_argument("rounding_accel_spike: n >= 1 and dt1 > 0 required");
    const double nn = n;
    return std::abs((1.0 - nn) / (nn * (1.0 + nn))) * 2.0 * dd_m / (dt1_s * dt1_s);
}

double implied_speed_kn(const AisMessage& a, const AisMessage& b) {
    const double d = geodesic_distance(a.pos(), b.pos());
    const double dt = std::abs(static_cast<double>(b.t - a.t));
    if (dt == 0) return d == 0 ? 0.0 : std::numeric_limits<double>::infinity();
    return d / dt / kKnot;
}

bool is_static_vessel(const std::vector<AisMessage>& seq, double box_side_m) {
    double lat0 = 90, lat1 = -90, lon0 = 180, lon1 = -180;
    std::size_t n = 0;
    for (const auto& m : seq) {
        if (!m.has_position()) continue;
        ++n;
        lat0 = std::min(lat0, m.lat);
        lat1 = std::max(lat1, m.lat);
        lon0 = std::min(lon0, m.lon);
        lon1 = std::max(lon1, m.lon);
    }
    if (n <= 1) return true;
    if (lon1 - lon0 > 180.0) return false;
    const double ns = geodesic_distance({lat0, 0.5 * (lon0 + lon1)}, {lat1, 0.5 * (lon0 + lon1)});
    // east-west extent is widest at the latitude nearest the equator
    const double lat_w = (lat0 <= 0 && lat1 >= 0) ? 0.0 : (std::abs(lat0) < std::abs(lat1) ? lat0 : lat1);
    const double ew = geodesic_distance({lat_w, lon0}, {lat_w, lon1});
    return ns <= box_side_m && ew <= box_side_m;
}

DedupeResult dedupe_low_speed(const std::vector<AisMessage>& seq, const CleanParams& params) {
    DedupeResult r;
    std::size_t i = 0;
    while (i < seq.size()) {
        std::size_t j = i + 1;
        while (j < seq.size() && seq[j].lat == seq[j - 1].lat && seq[j].lon == seq[j - 1].lon &&
               seq[j].t - seq[j - 1].t <= params.max_gap_s && implied_speed_kn(seq[j - 1], seq[j]) < params.stationary_speed_kn)
            ++j;
        // static reports carry copied coordinates, so prefer a genuine position report
        std::size_t keep = i;
        for (std::size_t k = i; k < j; ++k)
            if (seq[k].kind == ReportKind::Position) {
                keep = k;
                break;
            }
        r.messages.push_back(seq[keep]);
        r.run_lengths.push_back(j - i);
        r.removed += j - i - 1;
        i = j;
    }
    return r;
}

namespace {

std::vector<char> kinematic_keep_mask(const std::vector<AisMessage>& seq, const CleanParams& p) {
    std::vector<std::size_t> idx(seq.size());
    std::iota(idx.begin(), idx.end(), 0);
    const double vmax = p.max_speed_kn * kKnot;
    std::size_t i = 1;
    while (i < idx.size()) {
        const AisMessage& prev = seq[idx[i - 1]];
        const AisMessage& cur = seq[idx[i]];
        auto speed_ok = [&](const AisMessage& a, const AisMessage& b) {
            return b.t > a.t && geodesic_distance(a.pos(), b.pos()) / static_cast<double>(b.t - a.t) <= vmax;
        };
        bool bad = false;
        bool blame_first = false;
        if (!speed_ok(prev, cur)) {
            bad = true;
            // with only one earlier message, a consistent continuation points at the first one
            blame_first = i == 1 && i + 1 < idx.size() && speed_ok(cur, seq[idx[i + 1]]) &&
                          !speed_ok(prev, seq[idx[i + 1]]);
        } else if (i + 1 < idx.size()) {
            const AisMessage& next = seq[idx[i + 1]];
            // a jump into `next` is judged when `next` is examined, not blamed on `cur`
            if (next.t > cur.t && speed_ok(prev, next) && speed_ok(cur, next))
                bad = point_kinematics(prev, cur, next).accel > p.max_accel;
        }
        if (blame_first) {
            idx.erase(idx.begin());
        } else if (bad) {
            idx.erase(idx.begin() + static_cast<std::ptrdiff_t>(i));
            i = std::max<std::size_t>(1, i - 1);
        } else {
            ++i;
        }
    }
    std::vector<char> keep(seq.size(), 0);
    for (auto k : idx) keep[k] = 1;
    return keep;
}

enum class Interval : char { Moving, Stationary, Break };

struct SplitIndices {
    std::vector<std::vector<std::size_t>> legs;
    std::vector<std::vector<std::size_t>> stationary;
    std::size_t isolated = 0;
    std::size_t transit_only = 0;
    std::vector<Seconds> cuts;
};

SplitIndices split_indices(const std::vector<AisMessage>& m, const Geometry& g, const CleanParams& p) {
    SplitIndices out;
    const std::size_t n = m.size();
    if (n == 0) return out;
    if (n == 1) {
        out.isolated = 1;
        return out;
    }
    std::vector<Interval> iv(n - 1);
    for (std::size_t k = 0; k + 1 < n; ++k) {
        const Seconds dt = m[k + 1].t - m[k].t;
        const double d = geodesic_distance(m[k].pos(), m[k + 1].pos());
        if (dt > p.max_gap_s || d > p.max_jump_m) {
            iv[k] = Interval::Break;
        } else {
            const double v = dt > 0 ? d / static_cast<double>(dt) / kKnot : (d == 0 ? 0.0 : std::numeric_limits<double>::infinity());
            iv[k] = v < p.stationary_speed_kn ? Interval::Stationary : Interval::Moving;
        }
    }

    // A track that enters the main area and leaves it again is cut at its longest in-area interval.
    const TransitArea* main = g.main_area();
    std::vector<char> in_main(n, 0);
    if (main) {
        for (std::size_t i = 0; i < n; ++i) in_main[i] = main->polygon.contains(m[i].pos());
        std::size_t i = 0;
        while (i < n) {
            if (!in_main[i]) {
                ++i;
                continue;
            }
            std::size_t j = i;
            while (j + 1 < n && in_main[j + 1] && iv[j] != Interval::Break) ++j;
            // only a run entered from and left into the same contiguous track counts
            if (i > 0 && iv[i - 1] != Interval::Break && j + 1 < n && iv[j] != Interval::Break && j > i) {
                std::size_t best = i;
                for (std::size_t k = i; k < j; ++k)
                    if (m[k + 1].t - m[k].t > m[best + 1].t - m[best].t) best = k;
                iv[best] = Interval::Break;
                out.cuts.push_back(m[best].t);
            }
            i = j + 1;
        }
    }

    auto adjacent = [&](std::size_t i, Interval type) {
        return (i > 0 && iv[i - 1] == type) || (i + 1 < n && iv[i] == type);
    };
    std::size_t k = 0;
    while (k < n - 1) {
        if (iv[k] == Interval::Break) {
            ++k;
            continue;
        }
        const Interval type = iv[k];
        std::size_t e = k;
        while (e + 1 < n - 1 && iv[e + 1] == type) ++e;
        std::vector<std::size_t> members;
        for (std::size_t i = k; i <= e + 1; ++i)
            if (type == Interval::Moving || !adjacent(i, Interval::Moving)) members.push_back(i);
        if (type == Interval::Moving) {
            const bool all_main = std::all_of(members.begin(), members.end(), [&](std::size_t i) { return in_main[i] != 0; });
            if (main && all_main)
                out.transit_only += members.size();
            else
                out.legs.push_back(std::move(members));
        } else if (!members.empty()) {
            out.stationary.push_back(std::move(members));
        }
        k = e + 1;
    }
    for (std::size_t i = 0; i < n; ++i)
        if (!adjacent(i, Interval::Moving) && !adjacent(i, Interval::Stationary)) ++out.isolated;
    return out;
}

LatLon centroid(const std::vector<AisMessage>& m, const std::vector<std::size_t>& idx) {
    Vec3 s = Vec3::Zero();
    for (auto i : idx) s += to_unit(m[i].pos());
    return to_latlon(s.normalized());
}

void assign_drift(const std::vector<Leg>& legs, std::vector<StationaryPeriod>& sps,
                  const std::vector<std::vector<LatLon>>& member_pos) {
    for (std::size_t s = 0; s < sps.size(); ++s) {
        auto& sp = sps[s];
        const Leg* before = nullptr;
        const Leg* after = nullptr;
        for (const auto& l : legs) {
            if (l.end() <= sp.start) before = &l;
            if (!after && l.start() >= sp.end) after = &l;
        }
        if (before && after) {
            sp.drift_extent = geodesic_distance(before->end_pos(), after->start_pos());
        } else {
            double r = 0;
            for (const auto& q : member_pos[s]) r = std::max(r, geodesic_distance(sp.anchor, q));
            sp.drift_extent = 2.0 * r;
        }
    }
}

SplitResult build(const std::vector<AisMessage>& m, const SplitIndices& si, std::vector<std::vector<LatLon>>* member_pos) {
    SplitResult r;
    r.isolated = si.isolated;
    r.transit_only = si.transit_only;
    r.cuts = si.cuts;
    for (const auto& idx : si.legs) {
        Leg leg;
        leg.mmsi = m[idx.front()].mmsi;
        for (auto i : idx) leg.messages.push_back(m[i]);
        finalize_leg(leg);
        r.legs.push_back(std::move(leg));
    }
    for (const auto& idx : si.stationary) {
        StationaryPeriod sp;
        sp.mmsi = m[idx.front()].mmsi;
        sp.start = m[idx.front()].t;
        sp.end = m[idx.back()].t;
        sp.anchor = centroid(m, idx);
        sp.message_count = idx.size();
        r.stationary.push_back(sp);
        if (member_pos) {
            std::vector<LatLon> pts;
            for (auto i : idx) pts.push_back(m[i].pos());
            member_pos->push_back(std::move(pts));
        }
    }
    return r;
}

}  // namespace

std::vector<AisMessage> kinematic_filter(const std::vector<AisMessage>& seq, const CleanParams& params, std::size_t* removed) {
    const auto keep = kinematic_keep_mask(seq, params);
    std::vector<AisMessage> out;
    for (std::size_t i = 0; i < seq.size(); ++i)
        if (keep[i]) out.push_back(seq[i]);
    if (removed) *removed = seq.size() - out.size();
    return out;
}

void finalize_leg(Leg& leg) {
    const auto& ms = leg.messages;
    auto first_sog = std::find_if(ms.begin(), ms.end(), [](const AisMessage& m) { return m.sog.has_value(); });
    auto last_sog = std::find_if(ms.rbegin(), ms.rend(), [](const AisMessage& m) { return m.sog.has_value(); });
    const std::size_t n = ms.size();
    leg.v_entry = first_sog != ms.end() ? *first_sog->sog : (n > 1 ? implied_speed_kn(ms[0], ms[1]) : 0.0);
    leg.v_exit = last_sog != ms.rend() ? *last_sog->sog : (n > 1 ? implied_speed_kn(ms[n - 2], ms[n - 1]) : 0.0);
}

SplitResult split_periods(const std::vector<AisMessage>& seq, const Geometry& geometry, const CleanParams& params) {
    std::vector<AisMessage> in;
    std::size_t outside = 0;
    for (const auto& m : seq) {
        if (geometry.in_roi(m.pos()))
            in.push_back(m);
        else
            ++outside;
    }
    std::vector<std::vector<LatLon>> member_pos;
    SplitResult r = build(in, split_indices(in, geometry, params), &member_pos);
    r.outside_roi = outside;
    assign_drift(r.legs, r.stationary, member_pos);
    return r;
}

namespace {

bool junction_ok(const Leg& a, const Leg& b, const CleanParams& p) {
    const AisMessage& x = a.messages.back();
    const AisMessage& y = b.messages.front();
    if (y.t <= x.t) return false;
    if (geodesic_distance(x.pos(), y.pos()) / static_cast<double>(y.t - x.t) > p.max_speed_kn * kKnot) return false;
    if (a.messages.size() >= 2 && point_kinematics(a.messages[a.messages.size() - 2], x, y).accel > p.max_accel) return false;
    if (b.messages.size() >= 2 && point_kinematics(x, y, b.messages[1]).accel > p.max_accel) return false;
    return true;
}

}  // namespace

std::vector<Leg> merge_short_gaps(std::vector<Leg> legs, std::vector<StationaryPeriod>* stationary, const CleanParams& params,
                                  std::size_t* dropped, const std::vector<Seconds>& barriers) {
    std::vector<Leg> out;
    std::size_t n_dropped = 0;
    for (auto& leg : legs) {
        const bool barrier = !out.empty() && std::find(barriers.begin(), barriers.end(), out.back().end()) != barriers.end();
        if (!out.empty() && !barrier && leg.start() - out.back().end() <= params.merge_gap_s && junction_ok(out.back(), leg, params)) {
            Leg& cur = out.back();
            if (stationary) {
                const Seconds a = cur.end(), b = leg.start();
                auto& sps = *stationary;
                for (auto it = sps.begin(); it != sps.end();) {
                    if (it->start > a && it->end < b) {
                        n_dropped += it->message_count;
                        it = sps.erase(it);
                    } else {
                        ++it;
                    }
                }
            }
            cur.messages.insert(cur.messages.end(), leg.messages.begin(), leg.messages.end());
            finalize_leg(cur);
        } else {
            out.push_back(std::move(leg));
        }
    }
    if (dropped) *dropped = n_dropped;
    return out;
}

std::size_t VesselTimeline::kept_messages() const {
    std::size_t n = 0;
    for (const auto& l : legs) n += l.messages.size();
    for (const auto& s : stationary) n += s.message_count;
    return n;
}

VesselTimeline clean_vessel(Mmsi mmsi, const std::vector<AisMessage>& raw, const Geometry& geometry, const CleanParams& params) {
    VesselTimeline tl;
    tl.mmsi = mmsi;
    tl.input_messages = raw.size();
    auto count = [&tl](RemovalReason r, std::size_t n) { tl.removed[static_cast<int>(r)] += n; };

    const bool any_fix = std::any_of(raw.begin(), raw.end(), [](const AisMessage& m) { return m.kind == ReportKind::Position; });
    if (!any_fix) {
        count(RemovalReason::NoPositionFix, raw.size());
        return tl;
    }
    if (is_static_vessel(raw, params.static_box_m)) {
        count(RemovalReason::StaticVessel, raw.size());
        return tl;
    }
    std::size_t no_fix = 0;
    std::vector<AisMessage> seq = assign_static_positions(raw, &no_fix);
    count(RemovalReason::NoPositionFix, no_fix);

    std::vector<AisMessage> in_roi;
    for (auto& m : seq) {
        if (geometry.in_roi(m.pos()))
            in_roi.push_back(std::move(m));
        else
            count(RemovalReason::OutsideRoi, 1);
    }

    DedupeResult dd = dedupe_low_speed(in_roi, params);
    count(RemovalReason::Duplicate, dd.removed);
    std::vector<AisMessage> cur = std::move(dd.messages);

    // split -> filter legs -> re-split until the filter removes nothing
    SplitIndices si;
    for (;;) {
        si = split_indices(cur, geometry, params);
        std::vector<char> drop(cur.size(), 0);
        std::size_t n_drop = 0;
        for (const auto& idx : si.legs) {
            std::vector<AisMessage> leg_msgs;
            for (auto i : idx) leg_msgs.push_back(cur[i]);
            const auto keep = kinematic_keep_mask(leg_msgs, params);
            for (std::size_t k = 0; k < idx.size(); ++k)
                if (!keep[k]) {
                    drop[idx[k]] = 1;
                    ++n_drop;
                }
        }
        if (n_drop == 0) break;
        count(RemovalReason::Kinematic, n_drop);
        std::vector<AisMessage> next;
        for (std::size_t i = 0; i < cur.size(); ++i)
            if (!drop[i]) next.push_back(std::move(cur[i]));
        cur = std::move(next);
    }
    std::vector<std::vector<LatLon>> member_pos;
    SplitResult sr = build(cur, si, &member_pos);
    count(RemovalReason::Isolated, sr.isolated);
    count(RemovalReason::TransitAreaOnly, sr.transit_only);

    std::size_t merged_away = 0;
    // keep member positions aligned with the surviving stationary periods
    std::vector<StationaryPeriod> sps = sr.stationary;
    tl.legs = merge_short_gaps(std::move(sr.legs), &sps, params, &merged_away, sr.cuts);
    count(RemovalReason::Merge, merged_away);
    std::vector<std::vector<LatLon>> kept_pos;
    for (const auto& sp : sps) {
        for (std::size_t s = 0; s < sr.stationary.size(); ++s)
            if (sr.stationary[s].start == sp.start && sr.stationary[s].end == sp.end) {
                kept_pos.push_back(member_pos[s]);
                break;
            }
    }
    assign_drift(tl.legs, sps, kept_pos);
    tl.stationary = std::move(sps);
    return tl;
}

}  // namespace aisbay
