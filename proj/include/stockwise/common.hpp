#pragma once

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

namespace stockwise {

inline constexpr std::string_view kVersion = "1.0.0";

/// Raised when an operation receives arguments outside its contract.
class ParameterError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

using Date = std::chrono::sys_days;

inline Date make_date(int y, unsigned m, unsigned d) {
    return Date{std::chrono::year{y} / std::chrono::month{m} / std::chrono::day{d}};
}

/// Parses a strict ISO-8601 calendar date (YYYY-MM-DD).
inline Date parse_date(std::string_view text) {
    auto fail = [&] { throw ParameterError(fmt::format("invalid ISO date '{}'", text)); };
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') fail();
    int y = 0;
    unsigned m = 0, d = 0;
    auto field = [&](std::size_t pos, std::size_t len, auto& out) {
        auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + pos + len, out);
        if (ec != std::errc{} || ptr != text.data() + pos + len) fail();
    };
    field(0, 4, y);
    field(5, 2, m);
    field(8, 2, d);
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
    if (!ymd.ok()) fail();
    return Date{ymd};
}

inline std::string format_date(Date date) {
    const std::chrono::year_month_day ymd{date};
    return fmt::format("{:04d}-{:02d}-{:02d}", static_cast<int>(ymd.year()),
                       static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
}

/// ISO weekday, Monday = 1 ... Sunday = 7.
inline unsigned iso_weekday(Date date) { return std::chrono::weekday{date}.iso_encoding(); }

inline double mean(std::span<const double> xs) {
    if (xs.empty()) return 0.0;
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

/// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
inline double sample_sd(std::span<const double> xs) {
    if (xs.size() < 2) return 0.0;
    const double m = mean(xs);
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

/// Round half away from zero toward +inf for non-negative inputs ("half-up").
inline std::int64_t round_half_up(double x) { return static_cast<std::int64_t>(std::floor(x + 0.5)); }

}  // namespace stockwise
