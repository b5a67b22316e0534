#include "mercury/query.hpp"

#include <charconv>
#include <cmath>
#include <set>

namespace mercury {

namespace {

std::vector<std::string_view> split(std::string_view text, char sep) {
    std::vector<std::string_view> parts;
    for (;;) {
        auto pos = text.find(sep);
        parts.push_back(text.substr(0, pos));
        if (pos == std::string_view::npos) return parts;
        text.remove_prefix(pos + 1);
    }
}

double parse_coordinate(std::string_view text) {
    std::string s = trim(text);
    double v = 0;
    // from_chars rejects a leading '+', which is still a sensible spelling.
    std::string_view digits = s;
    if (!digits.empty() && digits.front() == '+') digits.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
    if (digits.empty() || ec != std::errc{} || ptr != digits.data() + digits.size() || !std::isfinite(v)) {
        throw ParamError("bbox", "bbox coordinate '" + s + "' is not a number");
    }
    return v;
}

SpatialExtent parse_bbox(std::string_view text) {
    auto parts = split(text, ',');
    if (parts.size() != 4) {
        throw ParamError("bbox", "bbox needs four comma-separated numbers west,south,east,north");
    }
    double v[4];
    for (int i = 0; i < 4; ++i) v[i] = parse_coordinate(parts[static_cast<std::size_t>(i)]);
    try {
        return normalize_bbox(v[0], v[1], v[2], v[3]);
    } catch (const ValidationError& e) {
        throw ParamError("bbox", std::string("bbox: ") + e.what());
    }
}

std::size_t parse_count(const std::string& name, std::string_view text, std::size_t max) {
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size() || v < 1 || v > max) {
        throw ParamError(name, name + " must be an integer between 1 and " + std::to_string(max));
    }
    return v;
}

Instant parse_bound(const std::string& name, const std::string& text, bool end) {
    try {
        return parse_date_or_time(text, end);
    } catch (const ValidationError&) {
        throw ParamError(name, name + " must be YYYY-MM-DD or an RFC 3339 date-time");
    }
}

} // namespace

Query parse_search_params(const SearchParams& params) {
    static const std::set<std::string, std::less<>> known{"q", "bbox", "start", "end", "provider", "keyword", "page",
                                                          "size"};
    std::set<std::string, std::less<>> seen;
    Query query;
    std::optional<Instant> start, end;
    for (const auto& [name, value] : params) {
        if (!known.count(name)) continue;
        if (!seen.insert(name).second) throw ParamError(name, name + " given more than once");
        if (name == "q") {
            query.terms_text = value;
        } else if (name == "bbox") {
            query.bbox = parse_bbox(value);
        } else if (name == "start") {
            start = parse_bound(name, value, false);
        } else if (name == "end") {
            end = parse_bound(name, value, true);
        } else if (name == "provider" || name == "keyword") {
            std::string v = trim(value);
            if (v.empty()) throw ParamError(name, name + " must not be empty");
            (name == "provider" ? query.provider_filter : query.keyword_filter) = v;
        } else if (name == "page") {
            query.page = parse_count(name, value, static_cast<std::size_t>(1) << 31);
        } else if (name == "size") {
            query.size = parse_count(name, value, kMaxPageSize);
        }
    }
    if (start || end) {
        TemporalExtent interval{start.value_or(Instant::min()), end.value_or(Instant::max())};
        if (interval.start > interval.end) throw ParamError("end", "end is before start");
        query.interval = interval;
    }
    return query;
}

std::string search_body(const Index& index, const Query& query) {
    return to_json(index.search(query)).dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) + "\n";
}

} // namespace mercury
