#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

#include "geoverify/error.hpp"

namespace geoverify {

/// Integer UNIX seconds, UTC.
using UnixTime = std::int64_t;

inline constexpr UnixTime kSecondsPerHour = 3600;
inline constexpr UnixTime kSecondsPerDay = 86400;

struct CivilTime {
    int year = 1970;
    unsigned month = 1;
    unsigned day = 1;
    int hour = 0;
    int minute = 0;
    int second = 0;
};

inline UnixTime floor_div(UnixTime a, UnixTime b) {
    UnixTime q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

inline CivilTime to_civil(UnixTime t) {
    using namespace std::chrono;
    const UnixTime days = floor_div(t, kSecondsPerDay);
    const UnixTime secs = t - days * kSecondsPerDay;
    const year_month_day ymd{sys_days{std::chrono::days{days}}};
    CivilTime c;
    c.year = static_cast<int>(ymd.year());
    c.month = static_cast<unsigned>(ymd.month());
    c.day = static_cast<unsigned>(ymd.day());
    c.hour = static_cast<int>(secs / 3600);
    c.minute = static_cast<int>((secs % 3600) / 60);
    c.second = static_cast<int>(secs % 60);
    return c;
}

inline UnixTime from_civil(const CivilTime& c) {
    using namespace std::chrono;
    const year_month_day ymd{year{c.year}, month{c.month}, day{c.day}};
    if (!ymd.ok()) {
        throw Error(ErrorKind::InvalidTime, "invalid calendar date " + std::to_string(c.year) +
                                                "-" + std::to_string(c.month) + "-" +
                                                std::to_string(c.day));
    }
    if (c.hour < 0 || c.hour > 23 || c.minute < 0 || c.minute > 59 || c.second < 0 ||
        c.second > 60) {
        throw Error(ErrorKind::InvalidTime, "invalid time of day");
    }
    const auto days = sys_days{ymd}.time_since_epoch().count();
    return static_cast<UnixTime>(days) * kSecondsPerDay + c.hour * 3600 + c.minute * 60 +
           c.second;
}

inline bool is_leap_year(int year) {
    return std::chrono::year{year}.is_leap();
}

/// "2024-02-02T18:00:00Z"
inline std::string format_iso(UnixTime t) {
    const CivilTime c = to_civil(t);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", c.year, c.month, c.day,
                  c.hour, c.minute, c.second);
    return buf;
}

/// "20240202T1800Z", used in file names.
inline std::string format_iso_basic(UnixTime t) {
    const CivilTime c = to_civil(t);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d%02u%02uT%02d%02dZ", c.year, c.month, c.day, c.hour,
                  c.minute);
    return buf;
}

namespace detail {

inline bool take_digits(std::string_view& s, std::size_t n, int& out) {
    if (s.size() < n) return false;
    int v = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const char ch = s[i];
        if (ch < '0' || ch > '9') return false;
        v = v * 10 + (ch - '0');
    }
    out = v;
    s.remove_prefix(n);
    return true;
}

inline bool take_char(std::string_view& s, char ch) {
    if (s.empty() || s.front() != ch) return false;
    s.remove_prefix(1);
    return true;
}

}  // namespace detail

/// Accepts extended ("2024-02-02T18:00:00Z", "2024-02-02 18:00", seconds and
/// trailing Z optional) and basic ("20240202T1800Z", "20240202T18Z") forms.
/// Returns nullopt on malformed text.
inline std::optional<UnixTime> try_parse_iso(std::string_view s) {
    using detail::take_char;
    using detail::take_digits;
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    CivilTime c;
    int y = 0, mo = 0, d = 0;
    const bool extended = s.size() > 4 && s[4] == '-';
    if (!take_digits(s, 4, y)) return std::nullopt;
    if (extended) {
        if (!take_char(s, '-') || !take_digits(s, 2, mo) || !take_char(s, '-') ||
            !take_digits(s, 2, d))
            return std::nullopt;
    } else if (!take_digits(s, 2, mo) || !take_digits(s, 2, d)) {
        return std::nullopt;
    }
    c.year = y;
    c.month = static_cast<unsigned>(mo);
    c.day = static_cast<unsigned>(d);
    if (!s.empty() && s != "Z") {
        if (!take_char(s, 'T') && !take_char(s, ' ')) return std::nullopt;
        if (!take_digits(s, 2, c.hour)) return std::nullopt;
        if (extended) {
            if (take_char(s, ':')) {
                if (!take_digits(s, 2, c.minute)) return std::nullopt;
                if (take_char(s, ':') && !take_digits(s, 2, c.second)) return std::nullopt;
            }
        } else if (!s.empty() && s.front() != 'Z') {
            if (!take_digits(s, 2, c.minute)) return std::nullopt;
            if (!s.empty() && s.front() != 'Z' && !take_digits(s, 2, c.second))
                return std::nullopt;
        }
    }
    take_char(s, 'Z');
    if (!s.empty()) return std::nullopt;
    try {
        return from_civil(c);
    } catch (const Error&) {
        return std::nullopt;
    }
}

inline UnixTime parse_iso(std::string_view s) {
    if (auto t = try_parse_iso(s)) return *t;
    throw Error(ErrorKind::InvalidTime, "cannot parse timestamp '" + std::string(s) + "'");
}

/// Day index in a fixed 366-day calendar: Feb 29 is always day 60 and
/// March 1 is always day 61, so leap-day samples never share a key with
/// ordinary days.
inline int calendar_day_366(UnixTime t) {
    static constexpr int kCumulative[12] = {0, 31, 60, 91, 121, 152, 182, 213, 244, 274, 305, 335};
    const CivilTime c = to_civil(t);
    return kCumulative[c.month - 1] + static_cast<int>(c.day);
}

}  // namespace geoverify
