#pragma once

#include "aisbay/classify.hpp"
#include "aisbay/ingest.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace aisbay {

// Per-vessel activity as seen by the metrics: legs plus every classified gap.
struct VesselActivity {
    Mmsi mmsi = 0;
    Category category = Category::Other;
    std::optional<double> gross_tonnage;
    std::vector<std::pair<Seconds, Seconds>> legs;  // inclusive [start, end]
    std::vector<GapClassification> gaps;
};

enum class GtBand { Below, AtOrAbove, Unknown };
inline constexpr int kGtBandCount = 3;
GtBand gt_band(const std::optional<double>& gt, double split);

enum class PresenceState : char { Absent = 0, Moving = 1, Stationary = 2 };

// State of a vessel at time t (legs inclusive, Moored gaps stationary, Absent gaps absent).
PresenceState state_at(const VesselActivity& v, Seconds t);

inline constexpr double kDefaultEdgeExclusionDays = 3.0;
inline constexpr double kDefaultGtSplit = 10000.0;

struct CountSeries {
    Seconds start = 0;
    Seconds step = 60;
    std::vector<int> moving;
    std::vector<int> stationary;
    std::vector<std::array<int, kCategoryCount>> total_by_category;
    std::vector<std::array<int, kGtBandCount>> total_by_band;

    std::size_t size() const { return moving.size(); }
    Seconds time(std::size_t k) const { return start + static_cast<Seconds>(k) * step; }
    int total(std::size_t k) const { return moving[k] + stationary[k]; }
};

struct CountAverages {
    double total = 0, moving = 0, stationary = 0;
    std::array<double, kCategoryCount> total_by_category{};
    std::array<double, kGtBandCount> total_by_band{};
};

CountSeries momentary_counts(const std::vector<VesselActivity>& vessels, const TimeWindow& window,
                             double gt_split = kDefaultGtSplit, unsigned threads = 1);

VesselActivity make_activity(const VesselTimeline& tl, std::vector<GapClassification> gaps,
                             const VesselProfile* profile);

// Moving averages use the whole window; total/stationary (and breakdowns) exclude the edges.
// Throws std::invalid_argument when the window is shorter than twice the exclusion.
CountAverages average_counts(const CountSeries& series, const TimeWindow& window,
                             double edge_exclusion_days = kDefaultEdgeExclusionDays);

enum class Direction { In, Out };

struct TransitEvent {
    Seconds t = 0;
    Mmsi mmsi = 0;
    Direction direction = Direction::In;
    Category category = Category::Other;
    std::optional<double> gross_tonnage;
};

// Out at the start and In at the end of every Absent gap; nothing at the window bounds.
std::vector<TransitEvent> transit_events(const std::vector<VesselActivity>& vessels);

struct TransitRates {
    double days = 0;
    double per_day = 0;  // In + Out
    double in_per_day = 0;
    double out_per_day = 0;
    std::array<double, kCategoryCount> per_day_by_category{};
    std::array<double, kGtBandCount> per_day_by_band{};
    std::array<int, 24> hourly_in{};
    std::array<int, 24> hourly_out{};
};

TransitRates transit_rates(const std::vector<TransitEvent>& events, const TimeWindow& window,
                           double utc_offset_hours = 0.0, double gt_split = kDefaultGtSplit);

struct DailyProfile {
    Seconds bin = 240;
    std::vector<double> bins;  // mean value per bin over the day
    double resultant = 0;      // R in [0, 1]
    bool mean_defined = false;
    double mean_hour = 0;  // circular mean, hours in [0, 24)
    double std_hours = 0;  // sqrt(-2 ln R) mapped to hours
    double mode_hour = 0;  // centre of the fullest bin
};

// Samples (t, value); times are folded to the local day using the UTC offset.
DailyProfile daily_profile(const std::vector<Seconds>& t, const std::vector<double>& value, Seconds bin = 240,
                           double utc_offset_hours = 0.0);

struct ConvergenceFit {
    double n_low = 0;
    double exponent = 0;  // < 0
    std::vector<double> residuals;  // log space
    double sse = 0;
};

// Least squares in log space of ln N = ln N_low + (M + 1)^a.
// Throws std::invalid_argument for < 3 points or data that does not decrease with M.
ConvergenceFit convergence_fit(const std::vector<double>& m, const std::vector<double>& n);

double low_transit_rate(double n_df, double n_low, double ndot_df_per_day);

enum class UncertaintyKind { Symmetric, UpperOnly, LowerOnly };

struct UncertaintyComponent {
    std::string name;
    double value = 0;  // fraction
    UncertaintyKind kind = UncertaintyKind::Symmetric;
};

struct UncertaintyLedger {
    std::vector<UncertaintyComponent> components;
    double upper = 0;
    double lower = 0;
};

UncertaintyLedger combine_uncertainties(const std::vector<UncertaintyComponent>& components);

struct GtAggregates {
    std::size_t transits = 0;
    std::size_t with_gt = 0;
    double coverage = 0;                  // with_gt / transits
    std::optional<double> mean_gt;        // per transit
    std::optional<double> cumulative_gt;  // over the window
    std::optional<double> yearly_gt;      // cumulative rate x 365.25 d
    std::optional<double> share_at_or_above;
    std::optional<double> share_below;
};

GtAggregates gt_aggregates(const std::vector<TransitEvent>& events, const TimeWindow& window,
                           double gt_split = kDefaultGtSplit);

}  // namespace aisbay
