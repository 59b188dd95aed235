#pragma once

#include "aisbay/geo.hpp"
#include "aisbay/timeutil.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace aisbay {

using Mmsi = std::int64_t;

enum class ReportKind { Position, Static };

struct AisMessage {
    Mmsi mmsi = 0;
    Seconds t = 0;
    double lat = 0.0;  // NaN on static reports until a position is assigned
    double lon = 0.0;
    std::optional<double> sog;  // knots, position reports only
    ReportKind kind = ReportKind::Position;
    int nav_status = -1;
    std::string destination;
    std::optional<int> ship_type;
    std::optional<std::int64_t> imo;

    LatLon pos() const { return {lat, lon}; }
    bool has_position() const;
};

bool operator==(const AisMessage& a, const AisMessage& b);

// Analysis window [start, end).
struct TimeWindow {
    Seconds start = 0;
    Seconds end = 0;
    bool contains(Seconds t) const { return t >= start && t < end; }
    double duration() const { return static_cast<double>(end - start); }
};

}  // namespace aisbay
