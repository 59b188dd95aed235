#pragma once

#include "aisbay/clean.hpp"

#include <string>
#include <vector>

namespace aisbay {

inline constexpr double kRouteTolerance = 10.0;  // metres
inline constexpr double kSpeedTolerance = 0.05;  // relative

// One constant-speed piece of the profile, over cumulative route distance.
struct SpeedSegment {
    double s_begin = 0, s_end = 0;  // metres along the route
    double t_begin = 0, t_end = 0;  // seconds (absolute)
    double speed() const { return t_end > t_begin ? (s_end - s_begin) / (t_end - t_begin) : 0.0; }
};

struct Trajectory {
    Mmsi mmsi = 0;
    std::vector<LatLon> route;
    std::vector<Vec3> route_unit;
    std::vector<double> cumdist;  // metres, per vertex
    std::vector<std::size_t> vertex_message;  // index of the leg message each vertex came from
    std::vector<SpeedSegment> profile;

    double length() const { return cumdist.empty() ? 0.0 : cumdist.back(); }
    double start_time() const { return profile.front().t_begin; }
    double end_time() const { return profile.back().t_end; }
    Vec3 unit_at_distance(double s) const;
    LatLon position_at_distance(double s) const;
    double distance_at_time(double t) const;  // throws std::out_of_range outside the span
    // Model time closest to `t_hint` at which the vessel is at route distance s.
    double time_at_distance(double s, double t_hint) const;
};

// Douglas-Peucker on the sphere. Returns indices of kept points (endpoints always kept).
std::vector<std::size_t> simplify_route(const std::vector<LatLon>& pts, double d_tol = kRouteTolerance);

// Along-route distance of each message, projected onto the edge bracketing it, made non-decreasing.
std::vector<double> along_route_positions(const std::vector<LatLon>& pts, const Trajectory& route);

// Greedy constant-speed pieces; intervals at or below `exempt_kn` do not constrain the fit.
std::vector<SpeedSegment> fit_speed_profile(const std::vector<double>& s, const std::vector<double>& t,
                                            double rel_tol = kSpeedTolerance, double exempt_kn = 0.5);

Trajectory build_trajectory(const Leg& leg, double d_tol = kRouteTolerance, double rel_tol = kSpeedTolerance);

LatLon model_position_at(const Trajectory& traj, double t);

// Distance from p to the route polyline and the along-route distance of the closest point.
ArcProjection route_projection(const Trajectory& traj, const LatLon& p, double* along = nullptr);

struct Quantiles {
    double median = 0.0;
    double p90 = 0.0;
};
Quantiles quantiles(std::vector<double> v);

struct FidelityReport {
    Quantiles position;  // metres, model position at message time
    Quantiles route;     // metres, distance to route
    Quantiles timing;    // seconds, nearest-approach time offset
    double rel_position_median = 0.0;  // fraction of leg route length
    double rel_route_median = 0.0;
    double rel_timing_median = 0.0;    // fraction of leg duration
    std::size_t samples = 0;
};

FidelityReport fidelity_report(const std::vector<Leg>& legs, const std::vector<Trajectory>& trajectories);

std::string trajectory_to_geojson_feature(const Trajectory& traj);
// Inverse of the writer above; doubles round-trip exactly.
Trajectory trajectory_from_geojson_feature(const std::string& text);

}  // namespace aisbay
