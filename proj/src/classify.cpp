#include "aisbay/classify.hpp"

#include "aisbay/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace aisbay {

double absence_threshold(double t0_hours, double v_exit_kn, double v_entry_kn) {
    if (t0_hours < 0 || v_exit_kn < 0 || v_entry_kn < 0 || std::isnan(t0_hours) || std::isnan(v_exit_kn) ||
        std::isnan(v_entry_kn))
        throw std::invalid_argument("absence_threshold: negative input");
    const double v = std::max(v_exit_kn, v_entry_kn);
    if (v == 0.0) return std::numeric_limits<double>::infinity();
    return t0_hours * std::pow(v / 10.0, -4.0);
}

const char* verdict_name(Verdict v) { return v == Verdict::Absent ? "absent" : "moored"; }

GapClassification classify_gap(const Leg* prev, const Leg* next, std::size_t messages_in_gap, const Geometry& geometry,
                               const AreaPolicy& policy, const TimeWindow* window) {
    if (!prev && !next) throw std::invalid_argument("classify_gap: at least one leg required");
    if ((!prev || !next) && !window) throw std::invalid_argument("classify_gap: edge gap needs the window");
    GapClassification g;
    g.start = prev ? prev->end() : window->start;
    g.end = next ? next->start() : window->end;
    g.opens_window = prev == nullptr;
    g.closes_window = next == nullptr;
    if (g.end < g.start) throw std::logic_error("classify_gap: overlapping legs");
    g.message_count = messages_in_gap;

    const double v_exit = prev ? prev->v_exit : 0.0;
    const double v_entry = next ? next->v_entry : 0.0;
    double thr = std::numeric_limits<double>::infinity();
    if (prev) {
        if (const TransitArea* a = locate_area(geometry, policy, prev->end_pos())) {
            g.prev_area = a->index;
            thr = std::min(thr, absence_threshold(a->t0_hours, v_exit, v_entry));
        }
    }
    if (next) {
        if (const TransitArea* a = locate_area(geometry, policy, next->start_pos())) {
            g.next_area = a->index;
            thr = std::min(thr, absence_threshold(a->t0_hours, v_exit, v_entry));
        }
    }
    g.threshold_hours = thr;
    const bool in_area = g.prev_area.has_value() || g.next_area.has_value();
    g.verdict = in_area && messages_in_gap <= kAbsentMaxMessages && g.hours() > thr ? Verdict::Absent : Verdict::Moored;
    return g;
}

std::vector<Seconds> gap_evidence_times(const std::vector<AisMessage>& raw, const Geometry& geometry) {
    std::vector<Seconds> out;
    for (const auto& m : assign_static_positions(raw))
        if (geometry.in_roi(m.pos())) out.push_back(m.t);
    std::sort(out.begin(), out.end());
    return out;
}

namespace {

std::size_t count_between(const std::vector<Seconds>& ts, Seconds a, bool a_closed, Seconds b, bool b_closed) {
    auto lo = a_closed ? std::lower_bound(ts.begin(), ts.end(), a) : std::upper_bound(ts.begin(), ts.end(), a);
    auto hi = b_closed ? std::upper_bound(ts.begin(), ts.end(), b) : std::lower_bound(ts.begin(), ts.end(), b);
    return hi > lo ? static_cast<std::size_t>(hi - lo) : 0;
}

}  // namespace

std::vector<GapClassification> classify_timeline(const VesselTimeline& tl, const std::vector<Seconds>& evidence,
                                                 const Geometry& geometry, const AreaPolicy& policy,
                                                 const TimeWindow& window) {
    std::vector<GapClassification> out;
    const auto& legs = tl.legs;
    if (legs.empty()) {
        GapClassification g;
        g.start = window.start;
        g.end = window.end;
        g.opens_window = g.closes_window = true;
        g.message_count = count_between(evidence, window.start, true, window.end, false);
        g.threshold_hours = std::numeric_limits<double>::infinity();
        out.push_back(g);
        return out;
    }
    for (std::size_t i = 1; i < legs.size(); ++i)
        if (legs[i].start() < legs[i - 1].end()) throw std::logic_error("classify_timeline: overlapping legs");
    if (legs.front().start() > window.start) {
        const auto n = count_between(evidence, window.start, true, legs.front().start(), false);
        out.push_back(classify_gap(nullptr, &legs.front(), n, geometry, policy, &window));
    }
    for (std::size_t i = 1; i < legs.size(); ++i) {
        const auto n = count_between(evidence, legs[i - 1].end(), false, legs[i].start(), false);
        out.push_back(classify_gap(&legs[i - 1], &legs[i], n, geometry, policy, &window));
    }
    if (legs.back().end() < window.end) {
        const auto n = count_between(evidence, legs.back().end(), false, window.end, false);
        out.push_back(classify_gap(&legs.back(), nullptr, n, geometry, policy, &window));
    }
    return out;
}

std::optional<LatLon> spherical_mean_position(const std::vector<LatLon>& pts) {
    Vec3 s = Vec3::Zero();
    for (const auto& p : pts) s += to_unit(p);
    if (pts.empty() || s.norm() < 1e-12 * static_cast<double>(pts.size())) return std::nullopt;
    return to_latlon(s.normalized());
}

ContactStats first_last_contact_stats(const std::vector<VesselTimeline>& timelines,
                                      const std::vector<std::vector<GapClassification>>& gaps) {
    std::vector<LatLon> first, last;
    for (std::size_t v = 0; v < timelines.size(); ++v) {
        const auto& legs = timelines[v].legs;
        for (const auto& g : gaps[v]) {
            if (g.verdict != Verdict::Absent) continue;
            for (const auto& l : legs) {
                if (!g.opens_window && l.end() == g.start) last.push_back(l.end_pos());
                if (!g.closes_window && l.start() == g.end) first.push_back(l.start_pos());
            }
        }
    }
    ContactStats s;
    s.mean_first = spherical_mean_position(first);
    s.mean_last = spherical_mean_position(last);
    s.n_first = first.size();
    s.n_last = last.size();
    return s;
}

}  // namespace aisbay
