#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace aisbay {

using Seconds = std::int64_t;  // UTC seconds since 1970-01-01

// RFC 3339 timestamp -> whole UTC seconds (fraction truncated). Throws std::invalid_argument.
Seconds parse_rfc3339(std::string_view s);
std::string format_rfc3339(Seconds t);

inline constexpr Seconds kMinute = 60;
inline constexpr Seconds kHour = 3600;
inline constexpr Seconds kDay = 86400;

}  // namespace aisbay
