#include "aisbay/timeutil.hpp"

#include <chrono>
#include <cstdio>
#include <stdexcept>

namespace aisbay {

namespace {

int digits(std::string_view s, std::size_t pos, std::size_t n) {
    if (pos + n > s.size()) throw std::invalid_argument("timestamp truncated");
    int v = 0;
    for (std::size_t i = pos; i < pos + n; ++i) {
        if (s[i] < '0' || s[i] > '9') throw std::invalid_argument("timestamp: expected digit");
        v = v * 10 + (s[i] - '0');
    }
    return v;
}

void expect(std::string_view s, std::size_t pos, std::string_view chars) {
    if (pos >= s.size() || chars.find(s[pos]) == std::string_view::npos)
        throw std::invalid_argument("timestamp: bad separator");
}

}  // namespace

Seconds parse_rfc3339(std::string_view s) {
    using namespace std::chrono;
    const int y = digits(s, 0, 4);
    expect(s, 4, "-");
    const int mo = digits(s, 5, 2);
    expect(s, 7, "-");
    const int d = digits(s, 8, 2);
    expect(s, 10, "Tt ");
    const int hh = digits(s, 11, 2);
    expect(s, 13, ":");
    const int mm = digits(s, 14, 2);
    expect(s, 16, ":");
    const int ss = digits(s, 17, 2);
    std::size_t pos = 19;
    if (pos < s.size() && s[pos] == '.') {
        ++pos;
        const std::size_t start = pos;
        while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') ++pos;
        if (pos == start) throw std::invalid_argument("timestamp: empty fraction");
    }
    int offset = 0;
    if (pos < s.size() && (s[pos] == 'Z' || s[pos] == 'z')) {
        ++pos;
    } else if (pos < s.size() && (s[pos] == '+' || s[pos] == '-')) {
        const int sign = s[pos] == '-' ? -1 : 1;
        const int oh = digits(s, pos + 1, 2);
        expect(s, pos + 3, ":");
        const int om = digits(s, pos + 4, 2);
        if (oh > 23 || om > 59) throw std::invalid_argument("timestamp: bad offset");
        offset = sign * (oh * 3600 + om * 60);
        pos += 6;
    } else {
        throw std::invalid_argument("timestamp: missing zone");
    }
    if (pos != s.size()) throw std::invalid_argument("timestamp: trailing characters");

    const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || hh > 23 || mm > 59 || ss > 60) throw std::invalid_argument("timestamp: field out of range");
    const Seconds days = sys_days{ymd}.time_since_epoch().count();
    return days * 86400 + hh * 3600 + mm * 60 + ss - offset;
}

std::string format_rfc3339(Seconds t) {
    using namespace std::chrono;
    Seconds days = t / 86400, rem = t % 86400;
    if (rem < 0) {
        rem += 86400;
        --days;
    }
    const year_month_day ymd{sys_days{std::chrono::days{days}}};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<int>(rem / 3600), static_cast<int>(rem % 3600 / 60), static_cast<int>(rem % 60));
    return buf;
}

}  // namespace aisbay
