#include "helpers.hpp"

#include "aisbay/metrics.hpp"
#include "aisbay/synth.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace aisbay;

namespace {

constexpr Seconds H = 3600;
const TimeWindow kWin{1711929600, 1711929600 + 10 * kDay};  // 2024-04-01, ten days

GapClassification gap(Seconds a, Seconds b, Verdict v, bool opens = false, bool closes = false) {
    GapClassification g;
    g.start = a;
    g.end = b;
    g.verdict = v;
    g.opens_window = opens;
    g.closes_window = closes;
    return g;
}

// Random activity tiling the window: legs separated by Moored or Absent gaps.
VesselActivity random_activity(Rng& rng, Mmsi mmsi, const TimeWindow& w) {
    VesselActivity v;
    v.mmsi = mmsi;
    v.category = static_cast<Category>(rng.below(kCategoryCount));
    if (rng.below(3)) v.gross_tonnage = rng.uniform(100, 30000);
    Seconds t = w.start + static_cast<Seconds>(rng.uniform(0, 12 * H));
    const Verdict first = rng.below(2) ? Verdict::Absent : Verdict::Moored;
    if (t > w.start) v.gaps.push_back(gap(w.start, t, first, true));
    for (;;) {
        const Seconds len = static_cast<Seconds>(rng.uniform(60, 6 * H));
        if (t + len >= w.end) {
            v.legs.emplace_back(t, w.end);
            break;
        }
        v.legs.emplace_back(t, t + len);
        const Seconds g = static_cast<Seconds>(rng.uniform(1, 30 * H));
        const Verdict verdict = rng.below(2) ? Verdict::Absent : Verdict::Moored;
        if (t + len + g >= w.end) {
            v.gaps.push_back(gap(t + len, w.end, verdict, false, true));
            break;
        }
        v.gaps.push_back(gap(t + len, t + len + g, verdict));
        t += len + g;
    }
    return v;
}

double resultant_oracle(const std::vector<Seconds>& t, const std::vector<double>& w, double* mean_hour) {
    double c = 0, s = 0, W = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double a = 2 * kPi * static_cast<double>(((t[i] % kDay) + kDay) % kDay) / static_cast<double>(kDay);
        c += w[i] * std::cos(a);
        s += w[i] * std::sin(a);
        W += w[i];
    }
    double h = std::atan2(s, c) * 24 / (2 * kPi);
    *mean_hour = h < 0 ? h + 24 : h;
    return std::hypot(c, s) / W;
}

// Best-Fisher von Mises sampler, radians around 0.
double von_mises(Rng& rng, double kappa) {
    const double tau = 1 + std::sqrt(1 + 4 * kappa * kappa);
    const double rho = (tau - std::sqrt(2 * tau)) / (2 * kappa);
    const double r = (1 + rho * rho) / (2 * rho);
    for (;;) {
        const double u1 = rng.uniform(0, 1), u2 = rng.uniform(0, 1), u3 = rng.uniform(0, 1);
        const double z = std::cos(kPi * u1);
        const double f = (1 + r * z) / (r + z);
        const double c = kappa * (r - f);
        if (c * (2 - c) - u2 > 0 || std::log(c / u2) + 1 - c >= 0) return (u3 > 0.5 ? 1 : -1) * std::acos(f);
    }
}

}  // namespace

TEST_CASE("momentary counts: simple schedules") {
    VesselActivity moored;
    moored.mmsi = 1;
    moored.gaps.push_back(gap(kWin.start, kWin.end, Verdict::Moored, true, true));
    auto cs = momentary_counts({moored}, kWin);
    auto avg = average_counts(cs, kWin);
    CHECK(avg.total == 1.0);
    CHECK(avg.stationary == 1.0);
    CHECK(avg.moving == 0.0);

    // one hour under way, one hour moored, repeated
    VesselActivity alt;
    alt.mmsi = 2;
    for (Seconds t = kWin.start; t < kWin.end; t += 2 * H) {
        alt.legs.emplace_back(t, t + H - 60);
        alt.gaps.push_back(gap(t + H - 60, t + 2 * H, Verdict::Moored, false, t + 2 * H >= kWin.end));
    }
    cs = momentary_counts({alt}, kWin);
    avg = average_counts(cs, kWin);
    CHECK(avg.moving == doctest::Approx(0.5));
    CHECK(avg.stationary == doctest::Approx(0.5));
    CHECK(avg.total == doctest::Approx(1.0));

    CHECK_THROWS_AS(average_counts(cs, {kWin.start, kWin.start + 6 * kDay}), std::invalid_argument);
    CHECK_NOTHROW(average_counts(cs, kWin, 0.0));
}

TEST_CASE("momentary counts agree with a per-minute state oracle") {
    Rng rng(4);
    std::vector<VesselActivity> fleet;
    for (Mmsi m = 1; m <= 40; ++m) fleet.push_back(random_activity(rng, m, kWin));
    const CountSeries cs = momentary_counts(fleet, kWin);
    const CountSeries cs4 = momentary_counts(fleet, kWin, kDefaultGtSplit, 4);
    REQUIRE(cs.size() == static_cast<std::size_t>(10 * kDay / 60));
    CHECK(cs.moving == cs4.moving);
    CHECK(cs.stationary == cs4.stationary);
    for (std::size_t k = 0; k < cs.size(); k += 7) {
        int mv = 0, st = 0;
        for (const auto& v : fleet) {
            const auto s = state_at(v, cs.time(k));
            mv += s == PresenceState::Moving;
            st += s == PresenceState::Stationary;
        }
        CHECK(cs.moving[k] == mv);
        CHECK(cs.stationary[k] == st);
        int by_cat = 0, by_band = 0;
        for (int c : cs.total_by_category[k]) by_cat += c;
        for (int b : cs.total_by_band[k]) by_band += b;
        CHECK(by_cat == cs.total(k));
        CHECK(by_band == cs.total(k));
    }
}

TEST_CASE("net transits match the change in vessel count") {
    Rng rng(9);
    std::vector<VesselActivity> fleet;
    for (Mmsi m = 1; m <= 30; ++m) fleet.push_back(random_activity(rng, m, kWin));
    const CountSeries cs = momentary_counts(fleet, kWin);
    const auto ev = transit_events(fleet);
    // between grid points k and k+1: arrivals in (t_k, t_k+1], departures in [t_k, t_k+1)
    for (std::size_t k = 0; k + 1 < cs.size(); ++k) {
        const Seconds a = cs.time(k), b = cs.time(k + 1);
        int net = 0;
        for (const auto& e : ev) {
            if (e.direction == Direction::In && e.t > a && e.t <= b) ++net;
            if (e.direction == Direction::Out && e.t >= a && e.t < b) --net;
        }
        if (net != cs.total(k + 1) - cs.total(k)) {
            CHECK(net == cs.total(k + 1) - cs.total(k));
            break;
        }
    }
}

TEST_CASE("transit rates") {
    std::vector<VesselActivity> fleet;
    for (Mmsi m = 1; m <= 10; ++m) {
        VesselActivity v;
        v.mmsi = m;
        v.category = Category::Cargo;
        v.gross_tonnage = 5000;
        Seconds t = kWin.start;
        for (int d = 0; d < 10; ++d) {
            const Seconds out = kWin.start + d * kDay + 8 * H, in = out + 3 * H;
            v.legs.emplace_back(t, out);
            v.gaps.push_back(gap(out, in, Verdict::Absent));
            t = in;
        }
        v.legs.emplace_back(t, kWin.end);
        fleet.push_back(v);
    }
    const auto ev = transit_events(fleet);
    const auto r = transit_rates(ev, kWin);
    CHECK(r.per_day == doctest::Approx(20.0));
    CHECK(r.in_per_day == doctest::Approx(10.0));
    CHECK(r.hourly_out[8] == 100);
    CHECK(r.hourly_in[11] == 100);
    CHECK(r.per_day_by_category[static_cast<int>(Category::Cargo)] == doctest::Approx(20.0));
    CHECK(r.per_day_by_band[static_cast<int>(GtBand::Below)] == doctest::Approx(20.0));
    // local time shifts the histogram
    CHECK(transit_rates(ev, kWin, 9.0).hourly_out[17] == 100);

    VesselActivity leaver;
    leaver.mmsi = 99;
    leaver.legs.emplace_back(kWin.start, kWin.start + H);
    leaver.gaps.push_back(gap(kWin.start + H, kWin.end, Verdict::Absent, false, true));
    const auto e2 = transit_events({leaver});
    REQUIRE(e2.size() == 1);
    CHECK(e2[0].direction == Direction::Out);
}

TEST_CASE("daily profile circular statistics") {
    const Seconds d0 = kWin.start;
    auto p = daily_profile({d0 + 12 * H, d0 + kDay + 12 * H}, {1, 1});
    CHECK(p.mean_hour == doctest::Approx(12.0));
    CHECK(p.std_hours == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(p.mode_hour == doctest::Approx(12.0 + 2.0 / 60));

    std::vector<Seconds> t;
    std::vector<double> w;
    for (Seconds s = 0; s < kDay; s += 60) {
        t.push_back(d0 + s);
        w.push_back(1.0);
    }
    p = daily_profile(t, w);
    CHECK(p.resultant < 1e-12);
    CHECK_FALSE(p.mean_defined);

    p = daily_profile({d0 + 6 * H, d0 + 18 * H}, {3, 3});
    CHECK(p.resultant == 0.0);
    CHECK_FALSE(p.mean_defined);

    CHECK_THROWS(daily_profile({}, {}));
    CHECK_THROWS(daily_profile({d0}, {1}, 7));

    // resultant and mean against direct trigonometry
    Rng rng(21);
    t.clear();
    w.clear();
    for (int i = 0; i < 10000; ++i) {
        t.push_back(d0 + static_cast<Seconds>(rng.below(14 * kDay)));
        w.push_back(rng.uniform(0, 3) + (i % 3 == 0 ? 2 : 0));
    }
    double mh = 0;
    const double R = resultant_oracle(t, w, &mh);
    p = daily_profile(t, w);
    CHECK(std::abs(p.resultant - R) < 1e-12);
    CHECK(std::abs(p.mean_hour - mh) < 1e-9 / std::max(R, 1e-3));

    // von Mises times around 14:00
    const double kappa = 4.0;
    t.clear();
    w.assign(40000, 1.0);
    for (int i = 0; i < 40000; ++i) {
        const double ang = von_mises(rng, kappa);
        t.push_back(d0 + static_cast<Seconds>(std::llround((14.0 + ang * 24 / (2 * kPi)) * 3600)) + (i % 14) * kDay);
    }
    p = daily_profile(t, w);
    const double a_k = std::cyl_bessel_i(1.0, kappa) / std::cyl_bessel_i(0.0, kappa);
    CHECK(p.mean_hour == doctest::Approx(14.0).epsilon(0.003));
    CHECK(p.resultant == doctest::Approx(a_k).epsilon(0.01));
    CHECK(p.std_hours == doctest::Approx(std::sqrt(-2 * std::log(a_k)) * 24 / (2 * kPi)).epsilon(0.02));
}

TEST_CASE("convergence fit") {
    std::vector<double> m, n;
    for (int k = 1; k <= 10; ++k) {
        m.push_back(k);
        n.push_back(100 * std::exp(std::pow(k + 1.0, -0.5)));
    }
    const auto fit = convergence_fit(m, n);
    CHECK(fit.n_low == doctest::Approx(100).epsilon(1e-6));
    CHECK(fit.exponent == doctest::Approx(-0.5).epsilon(1e-6));
    CHECK(fit.sse < 1e-12);
    CHECK(fit.exponent < 0);
    // far out the model approaches the asymptote
    CHECK(fit.n_low * std::exp(std::pow(1e12, fit.exponent)) == doctest::Approx(fit.n_low).epsilon(1e-5));
    CHECK(fit.n_low <= *std::min_element(n.begin(), n.end()) * std::exp(1.0));

    CHECK_THROWS_AS(convergence_fit({1, 2}, {3, 2}), std::invalid_argument);
    CHECK_THROWS_AS(convergence_fit({1, 2, 3}, {1, 2, 3}), std::invalid_argument);
}

TEST_CASE("low-policy transit rate") {
    CHECK(low_transit_rate(381.0, 370.8, 292.7) == doctest::Approx(313.1));
    CHECK(std::abs(low_transit_rate(381.0, 370.8, 292.7) - 312.9) <= 0.5);
    CHECK(low_transit_rate(50, 50, 12) == 12);
    CHECK(low_transit_rate(100, 90, 0) == 20);
    CHECK_THROWS(low_transit_rate(90, 100, 0));
}

TEST_CASE("uncertainty combination") {
    auto l = combine_uncertainties({{"a", 0.03}, {"b", 0.04}});
    CHECK(l.upper == doctest::Approx(0.05));
    CHECK(l.lower == doctest::Approx(0.05));
    l = combine_uncertainties({{"low", 0.027, UncertaintyKind::LowerOnly}});
    CHECK(l.lower == doctest::Approx(0.027));
    CHECK(l.upper == 0.0);
    l = combine_uncertainties({{"dark", 0.16, UncertaintyKind::UpperOnly}, {"status", 0.028}});
    CHECK(l.upper == doctest::Approx(0.162).epsilon(0.002));
    CHECK(l.lower == doctest::Approx(0.028));

    Rng rng(6);
    std::vector<UncertaintyComponent> cs;
    double up = 0, lo = 0;
    for (int i = 0; i < 20; ++i) {
        cs.push_back({"c", rng.uniform(0, 0.2), static_cast<UncertaintyKind>(rng.below(3))});
        const auto next = combine_uncertainties(cs);
        CHECK(next.upper >= up);
        CHECK(next.lower >= lo);
        up = next.upper;
        lo = next.lower;
    }
    CHECK_THROWS(combine_uncertainties({{"neg", -0.1}}));
}

TEST_CASE("gross tonnage aggregates") {
    std::vector<TransitEvent> ev = {{kWin.start + 10, 1, Direction::Out, Category::Cargo, 5000.0},
                                    {kWin.start + 20, 2, Direction::In, Category::Tanker, 15000.0}};
    auto g = gt_aggregates(ev, kWin);
    CHECK(*g.mean_gt == 10000);
    CHECK(*g.share_at_or_above == 0.5);
    CHECK(*g.share_below == 0.5);
    CHECK(*g.cumulative_gt == 20000);
    CHECK(*g.yearly_gt == doctest::Approx(20000 / 10.0 * 365.25));
    CHECK(g.coverage == 1.0);

    ev.push_back({kWin.start + 30, 3, Direction::In, Category::Other, std::nullopt});
    CHECK(gt_aggregates(ev, kWin).coverage == doctest::Approx(2.0 / 3));

    g = gt_aggregates({{kWin.start, 4, Direction::In, Category::Other, std::nullopt}}, kWin);
    CHECK(g.coverage == 0.0);
    CHECK_FALSE(g.mean_gt.has_value());
    CHECK_FALSE(g.share_below.has_value());
    CHECK(gt_band(std::nullopt, 1e4) == GtBand::Unknown);
    CHECK(gt_band(1e4, 1e4) == GtBand::AtOrAbove);
}
