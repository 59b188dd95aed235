#pragma once

#include "aisbay/areas.hpp"
#include "aisbay/classify.hpp"
#include "aisbay/georecv.hpp"
#include "aisbay/message.hpp"
#include "aisbay/metrics.hpp"

#include <cstdint>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

namespace aisbay {

// Portable generator: mt19937_64 plus hand-written transforms, so streams match across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed);
    double uniform();                       // [0, 1)
    double uniform(double lo, double hi);
    double normal();                        // standard normal, Box-Muller
    std::uint64_t below(std::uint64_t n);   // [0, n)
    bool bernoulli(double p) { return uniform() < p; }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0;
};

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

struct ShadowWedge {
    double azimuth_deg = 0;
    double half_angle_deg = 1;
    double r_start_m = 3000;  // occluder distance from the receiver
};

struct ReceiverModel {
    LatLon pos;
    double height_m = 40;
    double full_range_m = 60000;  // no loss inside
    double zero_range_m = 110000; // nothing received beyond
    std::vector<ShadowWedge> wedges;
    bool occluded(const LatLon& p) const;
    double drop_probability(const LatLon& p) const;  // linear fade between the two ranges
};

enum class ActivityKind { Moor, Move, Away };

struct Activity {
    ActivityKind kind = ActivityKind::Moor;
    Seconds start = 0, end = 0;
    LatLon pos;                       // Moor
    std::vector<LatLon> path;         // Move
    double speed_kn = 0;              // Move
    std::string destination;          // Move
    std::vector<TimeWindow> transceiver_off;            // Moor
    std::vector<std::pair<Seconds, LatLon>> strays;     // Away: reports leaking into the bay
};

struct VesselScript {
    Mmsi mmsi = 0;
    std::optional<int> ship_type;  // none: no static reports
    std::optional<std::int64_t> imo;
    std::optional<double> gross_tonnage;
    std::vector<Activity> acts;
};

struct Berth {
    std::string id;
    LatLon pos;
    bool shore = true;
};

struct Scenario {
    std::uint64_t seed = 0;
    Geometry geometry;
    TimeWindow window;
    std::vector<VesselScript> fleet;
    std::vector<Berth> berths;
    ReceiverModel receiver;
    double jitter_m = 3.0;
    double max_speed_kn = 50.0;
    AreaPolicy truth_policy = AreaPolicy::df();
};

struct TruthLeg {
    Mmsi mmsi = 0;
    Seconds start = 0, end = 0;
};

struct TruthGap {
    Mmsi mmsi = 0;
    Seconds start = 0, end = 0;
    bool opens_window = false, closes_window = false;
    Verdict verdict = Verdict::Moored;  // from the script
    bool rule_conforming = true;        // the absence rule reproduces the scripted verdict
    std::size_t messages = 0;
};

struct TruthTransit {
    Mmsi mmsi = 0;
    Seconds t = 0;
    Direction direction = Direction::In;
};

struct GroundTruth {
    TimeWindow window;
    std::vector<Mmsi> vessels;   // counted by the pipeline
    std::vector<Mmsi> excluded;  // never move
    std::vector<TruthLeg> legs;
    std::vector<TruthGap> gaps;
    std::vector<TruthTransit> transits;
    std::vector<Berth> berths;
    LatLon receiver;
};

struct SynthOutput {
    std::vector<AisMessage> messages;  // sorted by (t, mmsi)
    GroundTruth truth;
};

// Throws std::invalid_argument for gaps, overlaps, or moves faster than the scenario maximum.
void validate(const Scenario& s);
SynthOutput generate(const Scenario& s);

Geometry reference_geometry();
Scenario reference_scenario(std::uint64_t seed = 1);
Scenario random_scenario(std::uint64_t seed, std::size_t vessels = 12);

void write_ndjson(std::ostream& out, const std::vector<AisMessage>& messages);
std::string truth_to_json(const GroundTruth& truth);
GroundTruth truth_from_json(const std::string& text);
void write_gt_csv(std::ostream& out, const Scenario& s);

struct ShadowNoise {
    double angle_sd_deg = 0.2;
    double r_near_min_m = 2000, r_near_max_m = 15000;
    double length_min_m = 2000, length_max_m = 8000;
};

// One segment per wedge along its bisector; angular noise rotates each segment about its midpoint.
std::vector<ShadowSegment> generate_shadow_segments(const LatLon& receiver, const std::vector<ShadowWedge>& wedges,
                                                    const ShadowNoise& noise, Rng& rng,
                                                    const std::string& association = "rx");

Vec3 sample_vmf(const Vec3& mean, double kappa, Rng& rng);
// Tangent-plane rejection sampler, valid for concentrated distributions (kappa >> 1, 2 beta < kappa).
Vec3 sample_kent(const Vec3& mean, const Vec3& major, double kappa, double beta, Rng& rng);

}  // namespace aisbay
