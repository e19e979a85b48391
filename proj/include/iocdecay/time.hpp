#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace iocdecay {

// Whole-second UTC instants. Fractional seconds in input are truncated.
using Timestamp = std::chrono::sys_seconds;

// Accepts `YYYY-MM-DDTHH:MM:SS[.frac](Z|+HH:MM|-HH:MM)` and normalizes to UTC.
// Throws Error{parse_error} on anything else.
Timestamp parse_rfc3339(std::string_view text);

// Always emits `YYYY-MM-DDTHH:MM:SSZ`.
std::string format_rfc3339(Timestamp ts);

enum class TimeUnit { seconds, hours, days };

// "s", "h", "d" plus long forms ("seconds", "hours", "days").
TimeUnit parse_time_unit(std::string_view text);
const char* unit_symbol(TimeUnit unit) noexcept;
double seconds_per(TimeUnit unit) noexcept;

// A non-negative span carried together with the unit it is expressed in.
struct ElapsedTime {
    double value = 0.0;
    TimeUnit unit = TimeUnit::seconds;

    double seconds() const noexcept { return value * seconds_per(unit); }
    ElapsedTime to(TimeUnit target) const noexcept;

    static ElapsedTime between(Timestamp from, Timestamp to, TimeUnit unit) noexcept;
    static ElapsedTime from_seconds(double secs, TimeUnit unit) noexcept;
};

}  // namespace iocdecay
