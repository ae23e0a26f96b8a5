#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "synthctl/errors.hpp"

namespace synthctl {

enum class Weekday : int {
    sunday = 0,
    monday = 1,
    tuesday = 2,
    wednesday = 3,
    thursday = 4,
    friday = 5,
    saturday = 6,
};

/// Calendar date stored as a day count since 1970-01-01 (proleptic Gregorian).
/// Cheap value type; all panel week identifiers are Dates.
class Date {
public:
    constexpr Date() = default;
    constexpr explicit Date(std::int64_t day_number) : days_(day_number) {}

    static Date from_ymd(int year, int month, int day) {
        if (month < 1 || month > 12 || day < 1 || day > days_in_month(year, month))
            throw DataError("invalid calendar date: " + std::to_string(year) + "-" +
                            std::to_string(month) + "-" + std::to_string(day));
        return Date(days_from_civil(year, month, day));
    }

    /// Parses strict ISO 8601 "YYYY-MM-DD". Returns nullopt on any deviation.
    static std::optional<Date> try_parse_iso(std::string_view s) {
        if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
        int y = 0, m = 0, d = 0;
        for (int i : {0, 1, 2, 3}) {
            if (s[i] < '0' || s[i] > '9') return std::nullopt;
            y = y * 10 + (s[i] - '0');
        }
        for (int i : {5, 6}) {
            if (s[i] < '0' || s[i] > '9') return std::nullopt;
            m = m * 10 + (s[i] - '0');
        }
        for (int i : {8, 9}) {
            if (s[i] < '0' || s[i] > '9') return std::nullopt;
            d = d * 10 + (s[i] - '0');
        }
        if (m < 1 || m > 12 || d < 1 || d > days_in_month(y, m)) return std::nullopt;
        return Date(days_from_civil(y, m, d));
    }

    static Date parse_iso(std::string_view s) {
        auto d = try_parse_iso(s);
        if (!d) throw DataError("invalid ISO date: " + std::string(s));
        return *d;
    }

    std::int64_t day_number() const { return days_; }

    Weekday weekday() const {
        // 1970-01-01 was a Thursday.
        std::int64_t w = (days_ + 4) % 7;
        if (w < 0) w += 7;
        return static_cast<Weekday>(w);
    }

    std::string to_iso() const {
        auto [y, m, d] = civil_from_days(days_);
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", y, m, d);
        return std::string(buf);
    }

    Date operator+(std::int64_t days) const { return Date(days_ + days); }
    Date operator-(std::int64_t days) const { return Date(days_ - days); }
    std::int64_t operator-(Date other) const { return days_ - other.days_; }

    auto operator<=>(const Date&) const = default;

private:
    static constexpr bool is_leap(int y) {
        return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
    }

    static constexpr int days_in_month(int y, int m) {
        constexpr std::array<int, 12> lengths{31, 28, 31, 30, 31, 30,
                                              31, 31, 30, 31, 30, 31};
        return (m == 2 && is_leap(y)) ? 29 : lengths[static_cast<std::size_t>(m - 1)];
    }

    // Howard Hinnant's civil-date algorithms.
    static constexpr std::int64_t days_from_civil(int y, int m, int d) {
        y -= m <= 2;
        const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
        const unsigned yoe = static_cast<unsigned>(y - era * 400);
        const unsigned doy =
            static_cast<unsigned>((153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1);
        const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
        return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
    }

    static constexpr std::array<int, 3> civil_from_days(std::int64_t z) {
        z += 719468;
        const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
        const unsigned doe = static_cast<unsigned>(z - era * 146097);
        const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
        const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
        const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
        const unsigned mp = (5 * doy + 2) / 153;
        const unsigned d = doy - (153 * mp + 2) / 5 + 1;
        const unsigned m = mp < 10 ? mp + 3 : mp - 9;
        return {static_cast<int>(y + (m <= 2)), static_cast<int>(m),
                static_cast<int>(d)};
    }

    std::int64_t days_ = 0;
};

/// Accepts "sun", "sunday", "Mon", ... (case-insensitive).
inline std::optional<Weekday> try_parse_weekday(std::string_view s) {
    std::string lower;
    lower.reserve(s.size());
    for (char c : s) lower.push_back(static_cast<char>(std::tolower(c)));
    constexpr std::array<const char*, 7> names{"sunday",   "monday", "tuesday",
                                               "wednesday", "thursday", "friday",
                                               "saturday"};
    for (int i = 0; i < 7; ++i) {
        std::string_view full = names[static_cast<std::size_t>(i)];
        if (lower == full || lower == full.substr(0, 3))
            return static_cast<Weekday>(i);
    }
    return std::nullopt;
}

inline Weekday parse_weekday(std::string_view s) {
    auto w = try_parse_weekday(s);
    if (!w) throw UsageError("unknown weekday: " + std::string(s));
    return *w;
}

inline std::string weekday_name(Weekday w) {
    constexpr std::array<const char*, 7> names{"sunday",   "monday", "tuesday",
                                               "wednesday", "thursday", "friday",
                                               "saturday"};
    return names[static_cast<std::size_t>(w)];
}

/// Start of the week containing `d`, with weeks anchored at `anchor`.
inline Date week_start(Date d, Weekday anchor) {
    std::int64_t diff =
        (static_cast<int>(d.weekday()) - static_cast<int>(anchor) + 7) % 7;
    return d - diff;
}

}  // namespace synthctl
