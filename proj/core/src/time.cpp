#include "mercury/time.hpp"

#include <array>
#include <cstdio>

#include "mercury/error.hpp"

namespace mercury {

namespace {

using namespace std::chrono;

bool digits(std::string_view s, std::size_t pos, std::size_t count, int& out) {
    if (pos + count > s.size()) return false;
    int v = 0;
    for (std::size_t i = pos; i < pos + count; ++i) {
        char c = s[i];
        if (c < '0' || c > '9') return false;
        v = v * 10 + (c - '0');
    }
    out = v;
    return true;
}

// Parses "YYYY-MM-DD" at the start of `s`.
std::optional<sys_days> parse_date_prefix(std::string_view s) {
    int y = 0, m = 0, d = 0;
    if (s.size() < 10 || !digits(s, 0, 4, y) || s[4] != '-' || !digits(s, 5, 2, m) || s[7] != '-' ||
        !digits(s, 8, 2, d)) {
        return std::nullopt;
    }
    year_month_day ymd{year{y}, month{static_cast<unsigned>(m)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) return std::nullopt;
    return sys_days{ymd};
}

// Parses "hh:mm:ss" at `pos`.
std::optional<seconds> parse_clock(std::string_view s, std::size_t pos) {
    int h = 0, mi = 0, se = 0;
    if (!digits(s, pos, 2, h) || pos + 2 >= s.size() || s[pos + 2] != ':' || !digits(s, pos + 3, 2, mi) ||
        pos + 5 >= s.size() || s[pos + 5] != ':' || !digits(s, pos + 6, 2, se)) {
        return std::nullopt;
    }
    if (h > 23 || mi > 59 || se > 60) return std::nullopt;
    return hours{h} + minutes{mi} + seconds{se};
}

[[noreturn]] void bad_shape(std::string_view what, std::string_view text) {
    throw ShapeError(std::string(what) + ": '" + std::string(text) + "'");
}

} // namespace

Instant now_utc() { return time_point_cast<seconds>(system_clock::now()); }

std::string format_rfc3339(Instant t) {
    auto day_point = floor<days>(t);
    year_month_day ymd{day_point};
    hh_mm_ss hms{t - day_point};
    std::array<char, 64> buf{};
    std::snprintf(buf.data(), buf.size(), "%04d-%02u-%02uT%02ld:%02ld:%02lldZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<long>(hms.hours().count()), static_cast<long>(hms.minutes().count()),
                  static_cast<long long>(hms.seconds().count()));
    return buf.data();
}

std::string format_day(Instant t) { return format_rfc3339(t).substr(0, 10); }

std::string format_datestamp(Instant t, Granularity g) {
    return g == Granularity::day ? format_day(t) : format_rfc3339(t);
}

ParsedDatestamp parse_datestamp(std::string_view text) {
    auto date = parse_date_prefix(text);
    if (!date) bad_shape("malformed datestamp", text);
    if (text.size() == 10) return {Instant{*date}, Granularity::day};
    if (text.size() == 20 && text[10] == 'T' && text[19] == 'Z') {
        auto clock = parse_clock(text, 11);
        if (clock && *clock < days{1}) return {Instant{*date} + *clock, Granularity::seconds};
    }
    bad_shape("malformed datestamp", text);
}

Instant parse_rfc3339(std::string_view text) {
    auto date = parse_date_prefix(text);
    if (!date || text.size() < 20 || (text[10] != 'T' && text[10] != 't' && text[10] != ' ')) {
        bad_shape("malformed RFC 3339 time", text);
    }
    auto clock = parse_clock(text, 11);
    if (!clock || *clock >= days{1}) bad_shape("malformed RFC 3339 time", text);
    std::size_t pos = 19;
    if (pos < text.size() && text[pos] == '.') {
        ++pos;
        std::size_t start = pos;
        while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') ++pos;
        if (pos == start) bad_shape("malformed RFC 3339 fraction", text);
    }
    Instant local = Instant{*date} + *clock;
    std::string_view zone = text.substr(pos);
    if (zone == "Z" || zone == "z") return local;
    int oh = 0, om = 0;
    if (zone.size() == 6 && (zone[0] == '+' || zone[0] == '-') && digits(zone, 1, 2, oh) && zone[3] == ':' &&
        digits(zone, 4, 2, om) && oh < 24 && om < 60) {
        auto offset = hours{oh} + minutes{om};
        return zone[0] == '+' ? local - offset : local + offset;
    }
    bad_shape("malformed RFC 3339 offset", text);
}

Instant parse_date_or_time(std::string_view text, bool end_of_day_bound) {
    if (text.size() == 10) {
        auto date = parse_date_prefix(text);
        if (!date) bad_shape("malformed date", text);
        Instant t{*date};
        return end_of_day_bound ? end_of_day(t) : t;
    }
    return parse_rfc3339(text);
}

Instant start_of_day(Instant t) { return Instant{floor<days>(t)}; }

Instant end_of_day(Instant t) { return start_of_day(t) + days{1} - seconds{1}; }

std::string_view granularity_name(Granularity g) {
    return g == Granularity::day ? "YYYY-MM-DD" : "YYYY-MM-DDThh:mm:ssZ";
}

std::optional<Granularity> granularity_from_name(std::string_view name) {
    if (name == "YYYY-MM-DD" || name == "day") return Granularity::day;
    if (name == "YYYY-MM-DDThh:mm:ssZ" || name == "seconds") return Granularity::seconds;
    return std::nullopt;
}

} // namespace mercury
