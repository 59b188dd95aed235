#include "helpers.hpp"

#include "aisbay/georecv.hpp"
#include "aisbay/synth.hpp"

#include <doctest.h>

#include <Eigen/Geometry>
#include <cmath>

using namespace aisbay;

namespace {

const LatLon kRx{35.62, 139.80};

ShadowSegment seg(LatLon a, LatLon b, std::string id = "") { return {std::move(id), a, b, "rx"}; }

// Segment on the great circle through p at the given bearing, starting `near` metres away.
ShadowSegment ray(LatLon p, double bearing, double near, double len) {
    return seg(destination(p, bearing, near), destination(p, bearing, near + len));
}

double angle_between(const Vec3& a, const Vec3& b) { return std::atan2(a.cross(b).norm(), a.dot(b)); }

std::vector<Vec3> vmf_sample(const Vec3& mean, double kappa, std::size_t n, Rng& rng) {
    std::vector<Vec3> v;
    for (std::size_t i = 0; i < n; ++i) v.push_back(sample_vmf(mean, kappa, rng));
    return v;
}

}  // namespace

TEST_CASE("pairwise intersections") {
    const auto x = intersect(seg({0, -1}, {0, 1}), seg({-1, 0}, {1, 0}));
    CHECK(x.latlon.lat == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(std::abs(x.latlon.lon) < 1e-12);
    CHECK(x.angle_deg == doctest::Approx(90.0));
    CHECK(x.weight == doctest::Approx(1.0));

    // segments far from the crossing still resolve to the near side, not the antipode
    const auto far = intersect(ray(kRx, 10, 5000, 4000), ray(kRx, 100, 5000, 4000));
    CHECK(angle_between(far.position, to_unit(kRx)) < 1e-12);

    std::vector<ShadowSegment> three = {ray(kRx, 0, 3000, 5000), ray(kRx, 70, 4000, 5000), ray(kRx, 200, 2000, 3000)};
    const auto set = pairwise_intersections(three);
    REQUIRE(set.points.size() == 3);
    for (const auto& p : set.points) CHECK(angle_between(p.position, to_unit(kRx)) < 1e-12);

    // near-parallel pair
    const auto shallow = intersect(ray(kRx, 0, 3000, 5000), ray(kRx, 0.5, 3000, 5000));
    CHECK(shallow.angle_deg == doctest::Approx(0.5).epsilon(1e-3));
    CHECK(shallow.weight == 0.0);
    const auto ok = intersect(ray(kRx, 0, 3000, 5000), ray(kRx, 1.2, 3000, 5000));
    CHECK(ok.weight == doctest::Approx(std::sin(1.2 * kDeg)).epsilon(1e-3));

    // identical great circles are counted, not emitted
    const auto same = pairwise_intersections({ray(kRx, 30, 1000, 2000), ray(kRx, 30, 5000, 2000), ray(kRx, 80, 1000, 2000)});
    CHECK(same.degenerate == 1);
    CHECK(same.points.size() == 2);

    // symmetry under swapping the pair
    Rng rng(4);
    for (int i = 0; i < 200; ++i) {
        const auto s1 = ray(kRx, rng.uniform(0, 360), rng.uniform(1000, 9000), rng.uniform(1000, 9000));
        const auto s2 = ray(destination(kRx, rng.uniform(0, 360), 300), rng.uniform(0, 360), 2000, 4000);
        const auto a = intersect(s1, s2), b = intersect(s2, s1);
        CHECK(angle_between(a.position, b.position) < 1e-12);
        CHECK(a.angle_deg == doctest::Approx(b.angle_deg).epsilon(1e-12));
        CHECK(a.weight >= 0);
        CHECK(a.weight <= 1);
    }
}

TEST_CASE("outlier removal") {
    Rng rng(10);
    const Vec3 c = to_unit(kRx);
    auto pts = vmf_sample(c, 2000, 50, rng);
    pts.push_back(-c);
    const auto r = remove_outliers(pts);
    REQUIRE(!r.removed.empty());
    CHECK(r.removed.front() == pts.size() - 1);
    CHECK(r.kept.size() + r.removed.size() == pts.size());

    const auto same = remove_outliers(std::vector<Vec3>(10, c));
    CHECK(same.removed.empty());
    CHECK(same.infinite_concentration);

    // clean samples: about alpha of them trigger any removal
    int runs_with_removal = 0;
    const int runs = 200;
    for (int i = 0; i < runs; ++i) runs_with_removal += !remove_outliers(vmf_sample(c, 500, 200, rng)).removed.empty();
    const double rate = static_cast<double>(runs_with_removal) / runs;
    CHECK(rate >= 0.01);
    CHECK(rate <= 0.10);

    // uniform directions: behaviour is reported only
    std::vector<Vec3> uni;
    for (int i = 0; i < 100; ++i) uni.push_back(Vec3(rng.normal(), rng.normal(), rng.normal()).normalized());
    MESSAGE("uniform sample, removed " << remove_outliers(uni).removed.size() << " of 100");
}

TEST_CASE("spherical mean and median") {
    const Vec3 p = to_unit(kRx);
    for (auto est : {LocationEstimator::Mean, LocationEstimator::Median})
        CHECK(angle_between(spherical_location({p}, {1.0}, est), p) < 1e-12);

    const Vec3 pole(0, 0, 1);
    std::vector<Vec3> sym;
    for (double lon : {0.0, 90.0, 180.0, 270.0}) sym.push_back(to_unit({80, lon}));
    for (auto est : {LocationEstimator::Mean, LocationEstimator::Median})
        CHECK(angle_between(spherical_location(sym, {1, 1, 1, 1}, est), pole) < 1e-9);

    Rng rng(2);
    auto cluster = vmf_sample(p, 1e6, 20, rng);
    const Vec3 truth_mean = spherical_location(cluster, std::vector<double>(20, 1.0), LocationEstimator::Mean);
    const Vec3 truth_med = spherical_location(cluster, std::vector<double>(20, 1.0), LocationEstimator::Median);
    cluster.push_back(to_unit(destination(kRx, 45, 50000)));
    const std::vector<double> w(21, 1.0);
    const double mean_shift = angle_between(spherical_location(cluster, w, LocationEstimator::Mean), truth_mean);
    const double med_shift = angle_between(spherical_location(cluster, w, LocationEstimator::Median), truth_med);
    CHECK(med_shift < mean_shift);

    // median minimises the summed arc distance: no nearby point does better
    const Vec3 med = spherical_location(cluster, w, LocationEstimator::Median);
    auto cost = [&](const Vec3& x) {
        double s = 0;
        for (const auto& q : cluster) s += angle_between(x, q);
        return s;
    };
    const TangentFrame f = tangent_frame(med);
    for (int k = 0; k < 16; ++k) {
        const double a = 2 * kPi * k / 16;
        const Vec3 probe = (med + 1e-7 * (std::cos(a) * f.east + std::sin(a) * f.north)).normalized();
        CHECK(cost(probe) >= cost(med) - 1e-15);
    }

    CHECK_THROWS_AS(spherical_location({p}, {0.0}, LocationEstimator::Mean), std::invalid_argument);
    CHECK_THROWS_AS(spherical_location({p, -p}, {1, 1}, LocationEstimator::Mean), std::invalid_argument);
}

TEST_CASE("Kent fit") {
    Rng rng(33);
    const Vec3 c = to_unit(kRx);
    const auto iso = vmf_sample(c, 3000, 2000, rng);
    const auto fi = fit_kent(iso, std::vector<double>(iso.size(), 1.0));
    CHECK(fi.a / fi.b == doctest::Approx(1.0).epsilon(0.1));
    CHECK(fi.a >= fi.b);
    CHECK(std::abs(fi.major.dot(fi.mean)) < 1e-12);
    CHECK(std::abs(fi.minor.dot(fi.major)) < 1e-12);

    // planted axis ratio 4 with the major axis 30 degrees east of north
    const TangentFrame tf = tangent_frame(c);
    const Vec3 major = (std::cos(30 * kDeg) * tf.north + std::sin(30 * kDeg) * tf.east).normalized();
    const double kappa = 20000, ratio = 4.0;
    // kappa - 2 beta and kappa + 2 beta set the two variances: ratio^2 = (k + 2b) / (k - 2b)
    const double beta = kappa * (ratio * ratio - 1) / (2 * (ratio * ratio + 1));
    std::vector<Vec3> kent;
    for (int i = 0; i < 1000; ++i) kent.push_back(sample_kent(c, major, kappa, beta, rng));
    const auto fk = fit_kent(kent, std::vector<double>(kent.size(), 1.0));
    CHECK(fk.a / fk.b == doctest::Approx(ratio).epsilon(0.1));
    CHECK(fk.theta_deg == doctest::Approx(30.0).epsilon(0.1));

    // containment: about 68 % of draws inside the 68 % ellipse
    int inside = 0;
    for (int i = 0; i < 4000; ++i) inside += inside_ellipse(fk, containment_scale(0.68), sample_kent(c, major, kappa, beta, rng));
    CHECK(inside / 4000.0 == doctest::Approx(0.68).epsilon(0.03 / 0.68));

    std::vector<Vec3> arc;
    for (int i = 0; i < 20; ++i) arc.push_back(to_unit({35.0 + 0.01 * i, 139.8}));
    CHECK_THROWS_AS(fit_kent(arc, std::vector<double>(arc.size(), 1.0)), std::invalid_argument);
}

TEST_CASE("ellipse scales") {
    CHECK(containment_scale(0.68) == doctest::Approx(1.5096).epsilon(1e-4));
    CHECK(containment_scale(1e-12) < 1e-5);
    CHECK_THROWS(containment_scale(0.0));
    CHECK_THROWS(containment_scale(1.0));

    // closed form for two numerator degrees of freedom
    auto f2 = [](double k, double p) { return k / 2 * (std::pow(1 - p, -2 / k) - 1); };
    CHECK(f_quantile(2, 188, 0.95) == doctest::Approx(3.044).epsilon(1e-3 / 3.044));
    CHECK(f_quantile(2, 6, 0.95) == doctest::Approx(5.143).epsilon(1e-3 / 5.143));
    for (double k : {3.0, 10.0, 57.0, 400.0})
        for (double p : {0.68, 0.9, 0.95, 0.99}) CHECK(f_quantile(2, k, p) == doctest::Approx(f2(k, p)).epsilon(1e-10));
    CHECK(confidence_scale(190, 0.95) == doctest::Approx(std::sqrt(2 * 3.044 / 188)).epsilon(1e-3));
    CHECK(confidence_scale(190, 0.95) == doctest::Approx(0.180).epsilon(0.003));
    CHECK_THROWS(confidence_scale(2, 0.95));

    // the F-based scale approaches the large-n form from above
    for (double p : {0.9, 0.95, 0.99}) {
        double prev = 1e9;
        for (std::size_t n = 50; n <= 5000; n += 50) {
            const double ratio = confidence_scale(n, p) / confidence_scale_large_n(n, p);
            CHECK(ratio >= 1.0);
            CHECK(ratio <= prev);
            prev = ratio;
        }
        CHECK(prev == doctest::Approx(1.0).epsilon(1e-3));
    }
}

TEST_CASE("radio horizon") {
    CHECK(radio_horizon_km(20, 40) == doctest::Approx(44.5).epsilon(0.005));
    CHECK(radio_horizon_km(0, 0) == 0.0);
    CHECK(required_receiver_height_m(45, 20) == doctest::Approx(41.0).epsilon(0.03));
    CHECK(required_receiver_height_m(45, 20) >= 40.0);
    CHECK(radio_horizon_km(20, required_receiver_height_m(45, 20)) == doctest::Approx(45.0));
    CHECK_THROWS(radio_horizon_km(-1, 10));
}

TEST_CASE("receiver estimate") {
    std::vector<ShadowSegment> exact;
    for (int i = 0; i < 6; ++i) exact.push_back(ray(kRx, i * 31.0 + 5, 3000 + 500 * i, 4000));
    const ReceiverEstimate e = estimate_receiver(exact);
    CHECK(e.segments == 6);
    CHECK(e.intersections == 15);
    for (const LatLon& p : {e.weighted_mean, e.unweighted_mean, e.weighted_median, e.unweighted_median})
        CHECK(geodesic_distance(p, kRx) < 1e-3);
    CHECK(e.containment68.degenerate);
    CHECK_FALSE(e.confidence_weighted_median.has_value());

    Rng rng(5);
    std::vector<ShadowWedge> wedges;
    for (int i = 0; i < 12; ++i) wedges.push_back({i * 30.0 + rng.uniform(0, 10), 1.0, 3000});
    const auto noisy = estimate_receiver(generate_shadow_segments(kRx, wedges, {}, rng));
    CHECK(noisy.confidence_weighted_median.has_value());
    CHECK(geodesic_distance(noisy.weighted_mean, kRx) < 500);
    CHECK_THROWS(estimate_receiver({exact[0], exact[1]}));

    // rotating every segment rotates every output by the same rotation
    const Eigen::Matrix3d rot = Eigen::AngleAxisd(0.3, Vec3(0.2, -0.5, 0.8).normalized()).toRotationMatrix();
    const auto segs = generate_shadow_segments(kRx, wedges, {}, rng);
    std::vector<ShadowSegment> rotated;
    for (const auto& s : segs)
        rotated.push_back({s.id, to_latlon(rot * to_unit(s.a)), to_latlon(rot * to_unit(s.b)), s.receiver});
    const auto e0 = estimate_receiver(segs), e1 = estimate_receiver(rotated);
    CHECK(angle_between(rot * to_unit(e0.weighted_mean), to_unit(e1.weighted_mean)) < 1e-9);
    CHECK(angle_between(rot * to_unit(e0.unweighted_median), to_unit(e1.unweighted_median)) < 1e-9);
    CHECK(e1.containment68.a == doctest::Approx(e0.containment68.a).epsilon(1e-6));
    CHECK(e1.containment68.b == doctest::Approx(e0.containment68.b).epsilon(1e-6));
    CHECK(e1.outliers == e0.outliers);

    // threads do not change a bit
    EstimateOptions four;
    four.threads = 4;
    const auto e4 = estimate_receiver(segs, four);
    CHECK(e4.weighted_mean.lat == e0.weighted_mean.lat);
    CHECK(e4.weighted_median.lon == e0.weighted_median.lon);
}

TEST_CASE("segment GeoJSON") {
    const std::vector<ShadowSegment> s = {{"a", {35.1, 139.7}, {35.2, 139.8}, "north"}, {"", {35.0, 139.0}, {35.5, 139.5}, "west"}};
    const auto back = segments_from_geojson(segments_to_geojson(s));
    REQUIRE(back.size() == 2);
    CHECK(back[0].id == "a");
    CHECK(back[0].receiver == "north");
    CHECK(back[1].b.lat == 35.5);
    CHECK_THROWS(segments_from_geojson(R"({"type":"FeatureCollection","features":[{"type":"Feature","properties":{},"geometry":{"type":"LineString","coordinates":[[139,35],[139.1,35.1]]}}]})"));
}
