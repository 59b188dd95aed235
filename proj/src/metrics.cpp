#include "aisbay/metrics.hpp"

#include "aisbay/parallel.hpp"

#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace aisbay {

GtBand gt_band(const std::optional<double>& gt, double split) {
    if (!gt) return GtBand::Unknown;
    return *gt >= split ? GtBand::AtOrAbove : GtBand::Below;
}

VesselActivity make_activity(const VesselTimeline& tl, std::vector<GapClassification> gaps, const VesselProfile* profile) {
    VesselActivity v;
    v.mmsi = tl.mmsi;
    if (profile) {
        v.category = profile->category;
        v.gross_tonnage = profile->gross_tonnage;
    }
    for (const auto& l : tl.legs) v.legs.emplace_back(l.start(), l.end());
    v.gaps = std::move(gaps);
    return v;
}

namespace {

bool gap_covers(const GapClassification& g, Seconds t) {
    const bool after_start = g.opens_window ? t >= g.start : t > g.start;
    return after_start && t < g.end;
}

Seconds floor_div(Seconds a, Seconds b) { return a >= 0 ? a / b : -((-a + b - 1) / b); }

}  // namespace

PresenceState state_at(const VesselActivity& v, Seconds t) {
    for (const auto& [a, b] : v.legs)
        if (t >= a && t <= b) return PresenceState::Moving;
    for (const auto& g : v.gaps)
        if (gap_covers(g, t)) return g.verdict == Verdict::Moored ? PresenceState::Stationary : PresenceState::Absent;
    return PresenceState::Absent;
}

CountSeries momentary_counts(const std::vector<VesselActivity>& vessels, const TimeWindow& window, double gt_split,
                             unsigned threads) {
    CountSeries cs;
    cs.start = window.start;
    const Seconds step = cs.step;
    const std::size_t K = window.end > window.start ? static_cast<std::size_t>((window.end - window.start + step - 1) / step) : 0;

    // per-vessel state per grid point; reduced serially below so the sum order is fixed
    std::vector<std::vector<char>> states(vessels.size());
    parallel_for(vessels.size(), threads, [&](std::size_t i) {
        const VesselActivity& v = vessels[i];
        std::vector<char> st(K, static_cast<char>(PresenceState::Absent));
        auto first_at_or_after = [&](Seconds t) {
            return std::clamp<Seconds>(floor_div(t - window.start + step - 1, step), 0, static_cast<Seconds>(K));
        };
        for (const auto& g : v.gaps) {
            if (g.verdict != Verdict::Moored) continue;
            Seconds k0 = first_at_or_after(g.opens_window ? g.start : g.start + 1);
            const Seconds k1 = first_at_or_after(g.end);
            for (Seconds k = k0; k < k1; ++k) st[k] = static_cast<char>(PresenceState::Stationary);
        }
        for (const auto& [a, b] : v.legs) {
            const Seconds k0 = first_at_or_after(a), k1 = first_at_or_after(b + 1);
            for (Seconds k = k0; k < k1; ++k) st[k] = static_cast<char>(PresenceState::Moving);
        }
        states[i] = std::move(st);
    });

    cs.moving.assign(K, 0);
    cs.stationary.assign(K, 0);
    cs.total_by_category.assign(K, {});
    cs.total_by_band.assign(K, {});
    for (std::size_t i = 0; i < vessels.size(); ++i) {
        const int cat = static_cast<int>(vessels[i].category);
        const int band = static_cast<int>(gt_band(vessels[i].gross_tonnage, gt_split));
        const auto& st = states[i];
        for (std::size_t k = 0; k < K; ++k) {
            const auto s = static_cast<PresenceState>(st[k]);
            if (s == PresenceState::Absent) continue;
            (s == PresenceState::Moving ? cs.moving : cs.stationary)[k] += 1;
            cs.total_by_category[k][cat] += 1;
            cs.total_by_band[k][band] += 1;
        }
    }
    return cs;
}

CountAverages average_counts(const CountSeries& series, const TimeWindow& window, double edge_exclusion_days) {
    const double excl = edge_exclusion_days * static_cast<double>(kDay);
    if (edge_exclusion_days < 0 || window.duration() <= 2.0 * excl)
        throw std::invalid_argument("average_counts: window shorter than twice the edge exclusion");
    CountAverages a;
    std::size_t n_all = 0, n_core = 0;
    for (std::size_t k = 0; k < series.size(); ++k) {
        const double t = static_cast<double>(series.time(k));
        a.moving += series.moving[k];
        ++n_all;
        if (t >= static_cast<double>(window.start) + excl && t < static_cast<double>(window.end) - excl) {
            ++n_core;
            a.total += series.total(k);
            a.stationary += series.stationary[k];
            for (int c = 0; c < kCategoryCount; ++c) a.total_by_category[c] += series.total_by_category[k][c];
            for (int b = 0; b < kGtBandCount; ++b) a.total_by_band[b] += series.total_by_band[k][b];
        }
    }
    if (n_all) a.moving /= static_cast<double>(n_all);
    if (n_core) {
        const double d = static_cast<double>(n_core);
        a.total /= d;
        a.stationary /= d;
        for (auto& x : a.total_by_category) x /= d;
        for (auto& x : a.total_by_band) x /= d;
    }
    return a;
}

std::vector<TransitEvent> transit_events(const std::vector<VesselActivity>& vessels) {
    std::vector<TransitEvent> ev;
    for (const auto& v : vessels)
        for (const auto& g : v.gaps) {
            if (g.verdict != Verdict::Absent) continue;
            if (!g.opens_window) ev.push_back({g.start, v.mmsi, Direction::Out, v.category, v.gross_tonnage});
            if (!g.closes_window) ev.push_back({g.end, v.mmsi, Direction::In, v.category, v.gross_tonnage});
        }
    std::sort(ev.begin(), ev.end(), [](const TransitEvent& a, const TransitEvent& b) {
        if (a.t != b.t) return a.t < b.t;
        if (a.mmsi != b.mmsi) return a.mmsi < b.mmsi;
        return a.direction < b.direction;
    });
    return ev;
}

namespace {

Seconds local_second_of_day(Seconds t, double utc_offset_hours) {
    const Seconds off = static_cast<Seconds>(std::llround(utc_offset_hours * 3600.0));
    Seconds s = (t + off) % kDay;
    return s < 0 ? s + kDay : s;
}

}  // namespace

TransitRates transit_rates(const std::vector<TransitEvent>& events, const TimeWindow& window, double utc_offset_hours,
                           double gt_split) {
    TransitRates r;
    r.days = window.duration() / static_cast<double>(kDay);
    if (r.days <= 0) throw std::invalid_argument("transit_rates: empty window");
    for (const auto& e : events) {
        const int h = static_cast<int>(local_second_of_day(e.t, utc_offset_hours) / kHour);
        (e.direction == Direction::In ? r.hourly_in : r.hourly_out)[h] += 1;
        (e.direction == Direction::In ? r.in_per_day : r.out_per_day) += 1;
        r.per_day_by_category[static_cast<int>(e.category)] += 1;
        r.per_day_by_band[static_cast<int>(gt_band(e.gross_tonnage, gt_split))] += 1;
    }
    r.in_per_day /= r.days;
    r.out_per_day /= r.days;
    r.per_day = r.in_per_day + r.out_per_day;
    for (auto& x : r.per_day_by_category) x /= r.days;
    for (auto& x : r.per_day_by_band) x /= r.days;
    return r;
}

namespace {

// cos/sin of the time-of-day angle per second, built from one quadrant so that
// opposite times of day cancel exactly.
const std::vector<std::pair<double, double>>& day_trig() {
    static const std::vector<std::pair<double, double>> table = [] {
        constexpr Seconds q = kDay / 4;
        std::vector<std::pair<double, double>> t(kDay);
        for (Seconds s = 0; s < q; ++s) {
            const double a = 2.0 * kPi * static_cast<double>(s) / static_cast<double>(kDay);
            const double c = std::cos(a), sn = std::sin(a);
            t[s] = {c, sn};
            t[s + q] = {-sn, c};
            t[s + 2 * q] = {-c, -sn};
            t[s + 3 * q] = {sn, -c};
        }
        return t;
    }();
    return table;
}

}  // namespace

DailyProfile daily_profile(const std::vector<Seconds>& t, const std::vector<double>& value, Seconds bin,
                           double utc_offset_hours) {
    if (t.empty() || t.size() != value.size()) throw std::invalid_argument("daily_profile: empty or mismatched series");
    if (bin <= 0 || kDay % bin != 0) throw std::invalid_argument("daily_profile: bin must divide one day");
    const auto& trig = day_trig();
    DailyProfile p;
    p.bin = bin;
    const std::size_t nb = static_cast<std::size_t>(kDay / bin);
    std::vector<double> sum(nb, 0.0);
    std::vector<std::size_t> cnt(nb, 0);
    double C = 0, S = 0, W = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        const Seconds s = local_second_of_day(t[i], utc_offset_hours);
        const double w = value[i];
        if (w < 0 || !std::isfinite(w)) throw std::invalid_argument("daily_profile: values must be finite and >= 0");
        sum[static_cast<std::size_t>(s / bin)] += w;
        cnt[static_cast<std::size_t>(s / bin)] += 1;
        C += w * trig[s].first;
        S += w * trig[s].second;
        W += w;
    }
    p.bins.resize(nb);
    for (std::size_t b = 0; b < nb; ++b) p.bins[b] = cnt[b] ? sum[b] / static_cast<double>(cnt[b]) : 0.0;
    const std::size_t mode = static_cast<std::size_t>(std::max_element(p.bins.begin(), p.bins.end()) - p.bins.begin());
    p.mode_hour = (static_cast<double>(mode) + 0.5) * static_cast<double>(bin) / 3600.0;
    p.resultant = W > 0 ? std::min(1.0, std::hypot(C, S) / W) : 0.0;
    p.mean_defined = p.resultant > 1e-12;
    if (p.mean_defined) {
        double h = std::atan2(S, C) / (2.0 * kPi) * 24.0;
        p.mean_hour = h < 0 ? h + 24.0 : h;
        p.std_hours = std::sqrt(-2.0 * std::log(p.resultant)) * 24.0 / (2.0 * kPi);
    } else {
        p.mean_hour = std::numeric_limits<double>::quiet_NaN();
        p.std_hours = std::numeric_limits<double>::infinity();
    }
    return p;
}

namespace {

struct LogModel {
    const std::vector<double>& m;
    std::vector<double> y;  // ln N

    double offset_for(double a) const {
        double s = 0;
        for (std::size_t i = 0; i < m.size(); ++i) s += y[i] - std::pow(m[i] + 1.0, a);
        return s / static_cast<double>(m.size());
    }
    double sse(double a) const {
        const double c = offset_for(a);
        double s = 0;
        for (std::size_t i = 0; i < m.size(); ++i) {
            const double r = y[i] - c - std::pow(m[i] + 1.0, a);
            s += r * r;
        }
        return s;
    }
};

}  // namespace

ConvergenceFit convergence_fit(const std::vector<double>& m, const std::vector<double>& n) {
    if (m.size() != n.size() || m.size() < 3) throw std::invalid_argument("convergence_fit: need >= 3 (M, N) pairs");
    LogModel model{m, {}};
    for (std::size_t i = 0; i < n.size(); ++i) {
        if (!(n[i] > 0) || !(m[i] >= 0)) throw std::invalid_argument("convergence_fit: need N > 0 and M >= 0");
        model.y.push_back(std::log(n[i]));
    }
    // decreasing trend required: least-squares slope of ln N on M must be negative
    const double mm = std::accumulate(m.begin(), m.end(), 0.0) / static_cast<double>(m.size());
    const double my = std::accumulate(model.y.begin(), model.y.end(), 0.0) / static_cast<double>(m.size());
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < m.size(); ++i) {
        sxy += (m[i] - mm) * (model.y[i] - my);
        sxx += (m[i] - mm) * (m[i] - mm);
    }
    if (sxx <= 0 || sxy >= 0) throw std::invalid_argument("convergence_fit: N does not decrease with M");

    // exponent a = -exp(u); coarse scan then Brent on u
    const double u_lo = std::log(1e-4), u_hi = std::log(50.0);
    const int grid = 400;
    auto f = [&model](double u) { return model.sse(-std::exp(u)); };
    int best = 0;
    double best_v = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= grid; ++i) {
        const double v = f(u_lo + (u_hi - u_lo) * i / grid);
        if (v < best_v) {
            best_v = v;
            best = i;
        }
    }
    const double a_lo = u_lo + (u_hi - u_lo) * std::max(0, best - 1) / grid;
    const double a_hi = u_lo + (u_hi - u_lo) * std::min(grid, best + 1) / grid;
    const auto r = boost::math::tools::brent_find_minima(f, a_lo, a_hi, std::numeric_limits<double>::digits);
    double a = -std::exp(r.first);
    double c = model.offset_for(a);

    // Gauss-Newton polish on (c, a)
    for (int it = 0; it < 50; ++it) {
        double jtj00 = 0, jtj01 = 0, jtj11 = 0, g0 = 0, g1 = 0;
        for (std::size_t i = 0; i < m.size(); ++i) {
            const double p = std::pow(m[i] + 1.0, a);
            const double res = model.y[i] - c - p;
            const double j0 = 1.0, j1 = p * std::log(m[i] + 1.0);
            jtj00 += j0 * j0;
            jtj01 += j0 * j1;
            jtj11 += j1 * j1;
            g0 += j0 * res;
            g1 += j1 * res;
        }
        const double det = jtj00 * jtj11 - jtj01 * jtj01;
        if (!(std::abs(det) > 0)) break;
        const double dc = (jtj11 * g0 - jtj01 * g1) / det;
        const double da = (jtj00 * g1 - jtj01 * g0) / det;
        const double old = model.sse(a);
        if (!(a + da < 0) || model.sse(a + da) > old * (1 + 1e-12) + 1e-300) break;
        c += dc;
        a += da;
        if (std::abs(da) < 1e-15 * std::max(1.0, std::abs(a)) && std::abs(dc) < 1e-15 * std::max(1.0, std::abs(c))) break;
    }

    ConvergenceFit fit;
    fit.exponent = a;
    fit.n_low = std::exp(c);
    for (std::size_t i = 0; i < m.size(); ++i) {
        const double res = model.y[i] - c - std::pow(m[i] + 1.0, a);
        fit.residuals.push_back(res);
        fit.sse += res * res;
    }
    return fit;
}

double low_transit_rate(double n_df, double n_low, double ndot_df_per_day) {
    if (n_df < n_low) throw std::invalid_argument("low_transit_rate: N_df must be >= N_low");
    return ndot_df_per_day + 2.0 * (n_df - n_low);
}

UncertaintyLedger combine_uncertainties(const std::vector<UncertaintyComponent>& components) {
    UncertaintyLedger l;
    l.components = components;
    double up = 0, lo = 0;
    for (const auto& c : components) {
        if (!(c.value >= 0)) throw std::invalid_argument("combine_uncertainties: component " + c.name + " is negative");
        const double v2 = c.value * c.value;
        if (c.kind != UncertaintyKind::LowerOnly) up += v2;
        if (c.kind != UncertaintyKind::UpperOnly) lo += v2;
    }
    l.upper = std::sqrt(up);
    l.lower = std::sqrt(lo);
    return l;
}

GtAggregates gt_aggregates(const std::vector<TransitEvent>& events, const TimeWindow& window, double gt_split) {
    GtAggregates g;
    g.transits = events.size();
    double sum = 0;
    std::size_t above = 0;
    for (const auto& e : events) {
        if (!e.gross_tonnage) continue;
        ++g.with_gt;
        sum += *e.gross_tonnage;
        if (*e.gross_tonnage >= gt_split) ++above;
    }
    g.coverage = g.transits ? static_cast<double>(g.with_gt) / static_cast<double>(g.transits) : 0.0;
    if (g.with_gt) {
        const double n = static_cast<double>(g.with_gt);
        g.mean_gt = sum / n;
        g.cumulative_gt = sum;
        const double days = window.duration() / static_cast<double>(kDay);
        if (days > 0) g.yearly_gt = sum / days * 365.25;
        g.share_at_or_above = static_cast<double>(above) / n;
        g.share_below = 1.0 - *g.share_at_or_above;
    }
    return g;
}

}  // namespace aisbay
