#pragma once

#include <cctype>
#include <compare>
#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>
#include <utility>

#include "depdec/errors.hpp"

namespace depdec {

// Seconds since the Unix epoch, always UTC. Local-time inputs are rejected.
struct UtcTime {
    std::int64_t seconds = 0;
    auto operator<=>(const UtcTime&) const = default;
};

namespace detail {

inline std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

inline void civil_from_days(std::int64_t z, std::int64_t& y, unsigned& m, unsigned& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = doy - (153 * mp + 2) / 5 + 1;
    m = mp + (mp < 10 ? 3 : -9);
    y += m <= 2;
}

inline bool take_digits(std::string_view& s, int count, std::int64_t& out) {
    if (std::cmp_less(s.size(), count)) return false;
    out = 0;
    for (int i = 0; i < count; ++i) {
        if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
        out = out * 10 + (s[i] - '0');
    }
    s.remove_prefix(count);
    return true;
}

}  // namespace detail

/// Parses "YYYY-MM-DD" or "YYYY-MM-DDTHH:MM:SS[.fff](Z|+00:00)". Fractional
/// seconds are truncated; any nonzero zone offset is rejected.
inline UtcTime parse_utc(std::string_view text) {
    const std::string original(text);
    auto fail = [&]() -> Error { return Error("invalid UTC timestamp: \"" + original + "\""); };

    std::int64_t year, month, day;
    if (!detail::take_digits(text, 4, year)) throw fail();
    if (text.empty() || text.front() != '-') throw fail();
    text.remove_prefix(1);
    if (!detail::take_digits(text, 2, month)) throw fail();
    if (text.empty() || text.front() != '-') throw fail();
    text.remove_prefix(1);
    if (!detail::take_digits(text, 2, day)) throw fail();
    if (month < 1 || month > 12 || day < 1 || day > 31) throw fail();

    std::int64_t hour = 0, minute = 0, second = 0;
    if (!text.empty()) {
        if (text.front() != 'T' && text.front() != 't' && text.front() != ' ') throw fail();
        text.remove_prefix(1);
        if (!detail::take_digits(text, 2, hour)) throw fail();
        if (text.empty() || text.front() != ':') throw fail();
        text.remove_prefix(1);
        if (!detail::take_digits(text, 2, minute)) throw fail();
        if (!text.empty() && text.front() == ':') {
            text.remove_prefix(1);
            if (!detail::take_digits(text, 2, second)) throw fail();
        }
        if (hour > 23 || minute > 59 || second > 60) throw fail();
        if (!text.empty() && text.front() == '.') {
            text.remove_prefix(1);
            while (!text.empty() && std::isdigit(static_cast<unsigned char>(text.front())))
                text.remove_prefix(1);
        }
        if (!text.empty()) {
            if (text.front() == 'Z' || text.front() == 'z') {
                text.remove_prefix(1);
            } else if (text.front() == '+' || text.front() == '-') {
                text.remove_prefix(1);
                std::int64_t oh = 0, om = 0;
                if (!detail::take_digits(text, 2, oh)) throw fail();
                if (!text.empty() && text.front() == ':') text.remove_prefix(1);
                if (!text.empty() && !detail::take_digits(text, 2, om)) throw fail();
                if (oh != 0 || om != 0) throw fail();  // UTC only
            }
        }
        if (!text.empty()) throw fail();
    }

    const std::int64_t days =
        detail::days_from_civil(year, static_cast<unsigned>(month), static_cast<unsigned>(day));
    return UtcTime{days * 86400 + hour * 3600 + minute * 60 + second};
}

inline std::string format_utc(UtcTime t) {
    std::int64_t days = t.seconds / 86400;
    std::int64_t rem = t.seconds % 86400;
    if (rem < 0) {
        rem += 86400;
        days -= 1;
    }
    std::int64_t year;
    unsigned month, day;
    detail::civil_from_days(days, year, month, day);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04lld-%02u-%02uT%02lld:%02lld:%02lldZ",
                  static_cast<long long>(year), month, day, static_cast<long long>(rem / 3600),
                  static_cast<long long>((rem % 3600) / 60), static_cast<long long>(rem % 60));
    return buf;
}

}  // namespace depdec
