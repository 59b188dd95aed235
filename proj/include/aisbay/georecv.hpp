#pragma once

#include "aisbay/geo.hpp"

#include <optional>
#include <string>
#include <vector>

namespace aisbay {

struct ShadowSegment {
    std::string id;
    LatLon a, b;
    std::string receiver;
};

struct Intersection {
    Vec3 position = Vec3::Zero();
    LatLon latlon;
    std::size_t first = 0, second = 0;  // segment indices
    double angle_deg = 0;               // enclosing angle in [0, 90]
    double weight = 0;                  // sin(angle), zeroed below the cutoff
};

inline constexpr double kWeightCutoff = 0.02;

struct IntersectionSet {
    std::vector<Intersection> points;
    std::size_t degenerate = 0;  // pairs on the same great circle
};

// All pairwise great-circle intersections; of each antipodal pair the point closer to both
// segment midpoints is kept.
IntersectionSet pairwise_intersections(const std::vector<ShadowSegment>& segments, double weight_cutoff = kWeightCutoff,
                                       unsigned threads = 1);
Intersection intersect(const ShadowSegment& s1, const ShadowSegment& s2, double weight_cutoff = kWeightCutoff);

struct OutlierResult {
    std::vector<std::size_t> kept;     // indices into the input
    std::vector<std::size_t> removed;  // in removal order
    bool infinite_concentration = false;
};

// Iterative single-outlier discordancy test for Fisher-distributed directions, Bonferroni
// corrected over the sample (critical value F(2, 2(n-2)) at 1 - alpha/n).
OutlierResult remove_outliers(const std::vector<Vec3>& points, double alpha = 0.05);

enum class LocationEstimator { Mean, Median };

// Throws std::invalid_argument when weights sum to zero or the resultant vanishes.
Vec3 spherical_location(const std::vector<Vec3>& points, const std::vector<double>& weights, LocationEstimator est);

struct KentFit {
    Vec3 mean = Vec3::Zero();   // unit mean direction
    Vec3 major = Vec3::Zero();  // unit major axis, orthogonal to mean
    Vec3 minor = Vec3::Zero();
    double mu = 0;              // mean resultant length
    double sigma2 = 0, sigma3 = 0;
    double a = 0, b = 0;        // radians on the unit sphere
    double theta_deg = 0;       // major axis, degrees clockwise from north in (-90, 90]
};

// Moment fit about the given centre (defaults to the weighted mean direction).
// Throws std::invalid_argument when the tangent scatter is rank deficient.
KentFit fit_kent(const std::vector<Vec3>& points, const std::vector<double>& weights,
                 const std::optional<Vec3>& centre = std::nullopt);

struct Ellipse {
    LatLon centre;
    double a = 0, b = 0;  // radians
    double a_m = 0, b_m = 0;
    double theta_deg = 0;
    bool degenerate = false;
};

double containment_scale(double p);
Ellipse containment_ellipse(const KentFit& fit, double p);
// sqrt(m F(m, n-m; p) / (n-m)) with m = 2
double confidence_scale(std::size_t n, double p);
double confidence_scale_large_n(std::size_t n, double p);
double f_quantile(double d1, double d2, double p);
Ellipse confidence_ellipse(const KentFit& fit, std::size_t n, double p);
// Tangent-plane test against an ellipse built on `fit` scaled by `scale`.
bool inside_ellipse(const KentFit& fit, double scale, const Vec3& x);

inline constexpr double kRefraction = 4.0 / 3.0;
inline constexpr double kHorizonEarthRadiusKm = 6371.0;
double radio_horizon_km(double h_transmitter_m, double h_receiver_m, double k = kRefraction);
double required_receiver_height_m(double d_km, double h_transmitter_m, double k = kRefraction);

inline constexpr std::size_t kMinSegmentsForMedianConfidence = 7;

struct ReceiverEstimate {
    std::string receiver;
    std::size_t segments = 0;
    std::size_t intersections = 0;
    std::size_t degenerate_pairs = 0;
    std::size_t outliers = 0;
    std::size_t zero_weight = 0;
    LatLon weighted_mean, unweighted_mean, weighted_median, unweighted_median;
    Ellipse containment68;  // weighted fit
    Ellipse confidence_weighted_mean, confidence_unweighted_mean;
    std::optional<Ellipse> confidence_weighted_median, confidence_unweighted_median;
    std::optional<KentFit> fit;
};

struct EstimateOptions {
    double alpha = 0.05;
    double weight_cutoff = kWeightCutoff;
    double containment_p = 0.68;
    double confidence_p = 0.95;
    unsigned threads = 1;
};

ReceiverEstimate estimate_receiver(const std::vector<ShadowSegment>& segments, const EstimateOptions& opt = {});

// GeoJSON LineString features with property receiver_association (and optional id).
std::vector<ShadowSegment> segments_from_geojson(const std::string& text);
std::string segments_to_geojson(const std::vector<ShadowSegment>& segments);
std::string estimate_to_json(const ReceiverEstimate& e);

}  // namespace aisbay
