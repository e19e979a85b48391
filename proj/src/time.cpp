#include "iocdecay/time.hpp"

#include "iocdecay/error.hpp"

#include <cctype>
#include <cstdio>

namespace iocdecay {

namespace {

[[noreturn]] void bad_timestamp(std::string_view text, const char* why) {
    throw Error(ErrorCode::parse_error,
                "invalid RFC 3339 timestamp '" + std::string(text) + "': " + why);
}

int read_digits(std::string_view text, std::size_t& pos, std::size_t count) {
    if (pos + count > text.size()) {
        bad_timestamp(text, "truncated");
    }
    int value = 0;
    for (std::size_t i = 0; i < count; ++i) {
        const char c = text[pos + i];
        if (!std::isdigit(static_cast<unsigned char>(c))) {
            bad_timestamp(text, "expected digit");
        }
        value = value * 10 + (c - '0');
    }
    pos += count;
    return value;
}

void expect(std::string_view text, std::size_t& pos, char a, char b = '\0') {
    if (pos >= text.size() || (text[pos] != a && (b == '\0' || text[pos] != b))) {
        bad_timestamp(text, "unexpected separator");
    }
    ++pos;
}

}  // namespace

Timestamp parse_rfc3339(std::string_view text) {
    using namespace std::chrono;

    std::size_t pos = 0;
    const int y = read_digits(text, pos, 4);
    expect(text, pos, '-');
    const int mo = read_digits(text, pos, 2);
    expect(text, pos, '-');
    const int d = read_digits(text, pos, 2);
    expect(text, pos, 'T', 't');
    const int hh = read_digits(text, pos, 2);
    expect(text, pos, ':');
    const int mm = read_digits(text, pos, 2);
    expect(text, pos, ':');
    const int ss = read_digits(text, pos, 2);

    if (pos < text.size() && text[pos] == '.') {
        ++pos;
        const std::size_t start = pos;
        while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
            ++pos;
        }
        if (pos == start) {
            bad_timestamp(text, "empty fraction");
        }
    }

    int offset_minutes = 0;
    if (pos >= text.size()) {
        bad_timestamp(text, "missing UTC offset");
    }
    if (text[pos] == 'Z' || text[pos] == 'z') {
        ++pos;
    } else if (text[pos] == '+' || text[pos] == '-') {
        const int sign = text[pos] == '-' ? -1 : 1;
        ++pos;
        const int oh = read_digits(text, pos, 2);
        expect(text, pos, ':');
        const int om = read_digits(text, pos, 2);
        if (oh > 23 || om > 59) {
            bad_timestamp(text, "offset out of range");
        }
        offset_minutes = sign * (oh * 60 + om);
    } else {
        bad_timestamp(text, "missing UTC offset");
    }
    if (pos != text.size()) {
        bad_timestamp(text, "trailing characters");
    }

    const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)},
                             day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) {
        bad_timestamp(text, "no such date");
    }
    // 60 is allowed for leap seconds and folds into the next minute.
    if (hh > 23 || mm > 59 || ss > 60) {
        bad_timestamp(text, "time of day out of range");
    }
    const sys_seconds local = sys_days{ymd} + hours{hh} + minutes{mm} + seconds{ss};
    return local - minutes{offset_minutes};
}

std::string format_rfc3339(Timestamp ts) {
    using namespace std::chrono;
    const sys_days day_point = floor<days>(ts);
    const year_month_day ymd{day_point};
    const hh_mm_ss<seconds> tod{ts - day_point};
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:%02d:%02lldZ",
                  static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                  static_cast<unsigned>(ymd.day()), static_cast<int>(tod.hours().count()),
                  static_cast<int>(tod.minutes().count()),
                  static_cast<long long>(tod.seconds().count()));
    return buf;
}

TimeUnit parse_time_unit(std::string_view text) {
    if (text == "s" || text == "sec" || text == "seconds") return TimeUnit::seconds;
    if (text == "h" || text == "hours") return TimeUnit::hours;
    if (text == "d" || text == "days") return TimeUnit::days;
    throw Error(ErrorCode::invalid_parameter, "unknown time unit '" + std::string(text) + "'");
}

const char* unit_symbol(TimeUnit unit) noexcept {
    switch (unit) {
        case TimeUnit::seconds: return "s";
        case TimeUnit::hours: return "h";
        case TimeUnit::days: return "d";
    }
    return "s";
}

double seconds_per(TimeUnit unit) noexcept {
    switch (unit) {
        case TimeUnit::seconds: return 1.0;
        case TimeUnit::hours: return 3600.0;
        case TimeUnit::days: return 86400.0;
    }
    return 1.0;
}

ElapsedTime ElapsedTime::to(TimeUnit target) const noexcept {
    if (target == unit) {
        return *this;
    }
    return from_seconds(seconds(), target);
}

ElapsedTime ElapsedTime::between(Timestamp from, Timestamp to, TimeUnit unit) noexcept {
    return from_seconds(static_cast<double>((to - from).count()), unit);
}

ElapsedTime ElapsedTime::from_seconds(double secs, TimeUnit unit) noexcept {
    return ElapsedTime{secs / seconds_per(unit), unit};
}

}  // namespace iocdecay
