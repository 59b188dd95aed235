#pragma once

#include "aisbay/areas.hpp"
#include "aisbay/message.hpp"

#include <array>
#include <string>
#include <vector>

namespace aisbay {

struct CleanParams {
    double static_box_m = 100.0;
    double stationary_speed_kn = 0.5;
    Seconds max_gap_s = 4 * kHour;
    double max_jump_m = 40000.0;
    double max_speed_kn = 50.0;
    double max_accel = 1.0;  // m/s^2
    Seconds merge_gap_s = 120;
};

enum class RemovalReason {
    StaticVessel,
    NoPositionFix,
    OutsideRoi,
    Duplicate,
    Kinematic,
    Isolated,
    TransitAreaOnly,
    Merge,
};
inline constexpr int kRemovalReasonCount = 8;
const char* removal_reason_name(RemovalReason r);

using RemovalCounts = std::array<std::size_t, kRemovalReasonCount>;

struct Leg {
    Mmsi mmsi = 0;
    std::vector<AisMessage> messages;
    double v_entry = 0.0;  // knots
    double v_exit = 0.0;

    Seconds start() const { return messages.front().t; }
    Seconds end() const { return messages.back().t; }
    LatLon start_pos() const { return messages.front().pos(); }
    LatLon end_pos() const { return messages.back().pos(); }
};

struct StationaryPeriod {
    Mmsi mmsi = 0;
    Seconds start = 0;
    Seconds end = 0;
    LatLon anchor;
    double drift_extent = 0.0;  // metres
    std::size_t message_count = 0;
};

struct PointKinematics {
    double d1 = 0, d2 = 0;  // metres to previous / next
    double t1 = 0, t2 = 0;  // seconds to previous / next
    double speed = 0;       // m/s relative to previous
    double accel = 0;       // m/s^2
};

// Throws std::invalid_argument when either time difference is not positive.
PointKinematics point_kinematics(const AisMessage& prev, const AisMessage& cur, const AisMessage& next);

// Acceleration spike produced by coordinate rounding for a stationary vessel reporting at
// intervals dt1 and n*dt1 with equal apparent displacement dd (metres).
double rounding_accel_spike(int n, double dd_m, double dt1_s);

// Implied speed in knots between two messages (infinity for dt = 0 and distinct positions).
double implied_speed_kn(const AisMessage& a, const AisMessage& b);

bool is_static_vessel(const std::vector<AisMessage>& seq, double box_side_m = 100.0);

struct DedupeResult {
    std::vector<AisMessage> messages;
    std::vector<std::size_t> run_lengths;  // per retained message
    std::size_t removed = 0;
};
DedupeResult dedupe_low_speed(const std::vector<AisMessage>& seq, const CleanParams& params = {});

std::vector<AisMessage> kinematic_filter(const std::vector<AisMessage>& seq, const CleanParams& params = {},
                                         std::size_t* removed = nullptr);

struct SplitResult {
    std::vector<Leg> legs;
    std::vector<StationaryPeriod> stationary;
    std::size_t isolated = 0;
    std::size_t transit_only = 0;  // messages in legs discarded as main-area-only
    std::size_t outside_roi = 0;
    std::vector<Seconds> cuts;  // leg ends produced by the main-area rule
};

SplitResult split_periods(const std::vector<AisMessage>& seq, const Geometry& geometry, const CleanParams& params = {});

// Merges adjacent legs separated by <= merge_gap_s whose junction stays within the kinematic bounds.
// Stationary periods falling inside a merged gap are removed and their messages counted in `dropped`.
// A leg ending at one of `barriers` is never joined to its successor.
std::vector<Leg> merge_short_gaps(std::vector<Leg> legs, std::vector<StationaryPeriod>* stationary,
                                  const CleanParams& params = {}, std::size_t* dropped = nullptr,
                                  const std::vector<Seconds>& barriers = {});

void finalize_leg(Leg& leg);

struct VesselTimeline {
    Mmsi mmsi = 0;
    std::vector<Leg> legs;
    std::vector<StationaryPeriod> stationary;
    std::size_t input_messages = 0;
    RemovalCounts removed{};
    std::size_t kept_messages() const;
};

// Full cascade for one vessel's raw (time-ordered) sequence.
VesselTimeline clean_vessel(Mmsi mmsi, const std::vector<AisMessage>& raw, const Geometry& geometry,
                            const CleanParams& params = {});

}  // namespace aisbay
