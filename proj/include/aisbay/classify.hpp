#pragma once

#include "aisbay/areas.hpp"
#include "aisbay/clean.hpp"

#include <optional>
#include <vector>

namespace aisbay {

inline constexpr std::size_t kAbsentMaxMessages = 3;  // fewer than four

// Hours; +infinity when both speeds are zero. Throws std::invalid_argument on negative input.
double absence_threshold(double t0_hours, double v_exit_kn, double v_entry_kn);

enum class Verdict { Moored, Absent };
const char* verdict_name(Verdict v);

struct GapClassification {
    Seconds start = 0;
    Seconds end = 0;
    std::optional<int> prev_area;  // area index where the previous leg ends (included areas only)
    std::optional<int> next_area;
    std::size_t message_count = 0;
    Verdict verdict = Verdict::Moored;
    double threshold_hours = 0.0;  // +inf when no included endpoint area
    bool opens_window = false;     // gap starts at the window start (no previous leg)
    bool closes_window = false;    // gap ends at the window end (no next leg)
    double hours() const { return static_cast<double>(end - start) / 3600.0; }
};

// Either leg may be null for a window-edge gap, in which case `window` supplies the missing bound.
// Throws std::logic_error when the legs overlap in time.
GapClassification classify_gap(const Leg* prev, const Leg* next, std::size_t messages_in_gap, const Geometry& geometry,
                               const AreaPolicy& policy, const TimeWindow* window = nullptr);

// Messages of the vessel (positions assigned, ROI-filtered) used to count reports inside gaps.
std::vector<Seconds> gap_evidence_times(const std::vector<AisMessage>& raw, const Geometry& geometry);

// All gaps of one timeline, window edges included. A timeline without legs yields one Moored gap.
std::vector<GapClassification> classify_timeline(const VesselTimeline& tl, const std::vector<Seconds>& evidence,
                                                 const Geometry& geometry, const AreaPolicy& policy,
                                                 const TimeWindow& window);

struct ContactStats {
    std::optional<LatLon> mean_first;  // first messages after an absence
    std::optional<LatLon> mean_last;   // last messages before an absence
    std::size_t n_first = 0;
    std::size_t n_last = 0;
};

std::optional<LatLon> spherical_mean_position(const std::vector<LatLon>& pts);

ContactStats first_last_contact_stats(const std::vector<VesselTimeline>& timelines,
                                      const std::vector<std::vector<GapClassification>>& gaps);

}  // namespace aisbay
