#include "mercury/model.hpp"

#include <cmath>
#include <unordered_set>

#include "mercury/error.hpp"

namespace mercury {

namespace {

bool is_unreserved(unsigned char c) noexcept {
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '.' || c == '_' ||
           c == '-';
}

bool is_space(char c) noexcept { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

void check_extent_values(const SpatialExtent& e, std::vector<std::string>& out) {
    if (!std::isfinite(e.west) || !std::isfinite(e.east) || !std::isfinite(e.south) || !std::isfinite(e.north)) {
        out.emplace_back("spatial values finite");
        return;
    }
    if (e.south < -90 || e.south > 90 || e.north < -90 || e.north > 90) out.emplace_back("latitude in [-90, 90]");
    if (e.west < -180 || e.west > 180 || e.east < -180 || e.east > 180) out.emplace_back("longitude in [-180, 180]");
    if (e.south > e.north) out.emplace_back("south ≤ north");
}

const nlohmann::json& require(const nlohmann::json& j, const char* field) {
    auto it = j.find(field);
    if (it == j.end() || it->is_null()) throw ValidationError(std::string("missing field '") + field + "'");
    return *it;
}

std::string require_string(const nlohmann::json& j, const char* field) {
    const auto& v = require(j, field);
    if (!v.is_string()) throw ValidationError(std::string("field '") + field + "' must be a string");
    return v.get<std::string>();
}

double require_number(const nlohmann::json& j, const char* field) {
    const auto& v = require(j, field);
    if (!v.is_number()) throw ValidationError(std::string("field '") + field + "' must be a number");
    return v.get<double>();
}

std::string optional_string(const nlohmann::json& j, const char* field) {
    auto it = j.find(field);
    if (it == j.end() || it->is_null()) return {};
    if (!it->is_string()) throw ValidationError(std::string("field '") + field + "' must be a string");
    return it->get<std::string>();
}

Instant instant_field(const nlohmann::json& j, const char* field) {
    try {
        return parse_rfc3339(require_string(j, field));
    } catch (const ShapeError& e) {
        throw ValidationError(std::string("field '") + field + "': " + e.what());
    }
}

} // namespace

std::string trim(std::string_view text) {
    std::size_t b = 0, e = text.size();
    while (b < e && is_space(text[b])) ++b;
    while (e > b && is_space(text[e - 1])) --e;
    return std::string(text.substr(b, e - b));
}

bool is_valid_provider_key(std::string_view key) noexcept {
    if (key.empty()) return false;
    for (char c : key) {
        if (!((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' || c == '-')) return false;
    }
    return true;
}

RecordId make_record_id(std::string_view provider_key, std::string_view local_identifier) {
    if (!is_valid_provider_key(provider_key)) {
        throw ValidationError("provider_key '" + std::string(provider_key) + "' does not match [a-z0-9_-]+");
    }
    if (local_identifier.empty()) throw ValidationError("local_identifier must be nonempty");
    static constexpr char hex[] = "0123456789ABCDEF";
    std::string out;
    out.reserve(provider_key.size() + 1 + local_identifier.size() * 3);
    out.append(provider_key);
    out.push_back(':');
    for (unsigned char c : local_identifier) {
        if (is_unreserved(c)) {
            out.push_back(static_cast<char>(c));
        } else {
            out.push_back('%');
            out.push_back(hex[c >> 4]);
            out.push_back(hex[c & 0xF]);
        }
    }
    return RecordId::from_string(std::move(out));
}

Validation validate_record(const MetadataRecord& record) {
    Validation result;
    auto& v = result.violations;

    if (!is_valid_provider_key(record.provider_key)) v.emplace_back("provider_key matches [a-z0-9_-]+");
    if (record.local_identifier.empty()) v.emplace_back("local_identifier nonempty");
    if (is_valid_provider_key(record.provider_key) && !record.local_identifier.empty()) {
        if (record.record_id != make_record_id(record.provider_key, record.local_identifier)) {
            v.emplace_back("record_id = make_record_id(provider_key, local_identifier)");
        }
    }
    if (!record.deleted && trim(record.title).empty()) v.emplace_back("title nonempty when deleted = false");

    std::unordered_set<std::string_view> seen;
    bool blank = false, duplicate = false;
    for (const auto& k : record.keywords) {
        if (trim(k).empty()) blank = true;
        if (!seen.insert(k).second) duplicate = true;
    }
    if (blank) v.emplace_back("keywords nonempty");
    if (duplicate) v.emplace_back("keywords deduplicated");

    for (const auto& a : record.attributes) {
        if (trim(a.name).empty()) {
            v.emplace_back("attribute name nonempty");
            break;
        }
    }
    if (record.spatial) check_extent_values(*record.spatial, v);
    if (record.temporal && record.temporal->start > record.temporal->end) v.emplace_back("start ≤ end");

    if (v.empty()) result.record = record;
    return result;
}

SpatialExtent normalize_bbox(double west, double south, double east, double north) {
    if (!std::isfinite(west) || !std::isfinite(south) || !std::isfinite(east) || !std::isfinite(north)) {
        throw RangeError("bounding box values must be finite");
    }
    if (std::fabs(south) > 90 || std::fabs(north) > 90) throw RangeError("latitude outside [-90, 90]");
    if (std::fabs(west) > 180 || std::fabs(east) > 180) throw RangeError("longitude outside [-180, 180]");
    if (south > north) throw OrderError("south > north");

    // A non-crossing box with west=+180 or east=-180 is a zero-width line on
    // the antimeridian. Rewriting either edge would turn it into the whole
    // globe, so those lines are kept verbatim and every other value is already
    // canonical.
    return SpatialExtent{west, south, east, north};
}

std::vector<std::string> dedupe_keywords(const std::vector<std::string>& keywords) {
    std::vector<std::string> out;
    std::unordered_set<std::string> seen;
    for (const auto& k : keywords) {
        auto t = trim(k);
        if (t.empty()) continue;
        if (seen.insert(t).second) out.push_back(std::move(t));
    }
    return out;
}

nlohmann::json to_json(const SpatialExtent& e) {
    return {{"west", e.west}, {"south", e.south}, {"east", e.east}, {"north", e.north}};
}

nlohmann::json to_json(const TemporalExtent& e) {
    return {{"start", format_rfc3339(e.start)}, {"end", format_rfc3339(e.end)}};
}

nlohmann::json to_json(const Attribute& a) {
    nlohmann::json j{{"name", a.name}, {"unit", a.unit}};
    if (a.precision) j["precision"] = *a.precision;
    if (a.accuracy) j["accuracy"] = *a.accuracy;
    return j;
}

nlohmann::json to_json(const MetadataRecord& r) {
    nlohmann::json attributes = nlohmann::json::array();
    for (const auto& a : r.attributes) attributes.push_back(to_json(a));
    nlohmann::json j{
        {"record_id", r.record_id.str()},
        {"provider_key", r.provider_key},
        {"local_identifier", r.local_identifier},
        {"title", r.title},
        {"abstract", r.abstract},
        {"keywords", r.keywords},
        {"attributes", std::move(attributes)},
        {"lineage", r.lineage},
        {"datestamp", format_rfc3339(r.datestamp)},
        {"deleted", r.deleted},
    };
    if (r.spatial) j["spatial"] = to_json(*r.spatial);
    if (r.temporal) j["temporal"] = to_json(*r.temporal);
    if (r.source_url) j["source_url"] = *r.source_url;
    return j;
}

SpatialExtent spatial_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ValidationError("spatial extent must be an object");
    return SpatialExtent{require_number(j, "west"), require_number(j, "south"), require_number(j, "east"),
                         require_number(j, "north")};
}

TemporalExtent temporal_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ValidationError("temporal extent must be an object");
    return TemporalExtent{instant_field(j, "start"), instant_field(j, "end")};
}

Attribute attribute_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ValidationError("attribute must be an object");
    Attribute a;
    a.name = require_string(j, "name");
    a.unit = optional_string(j, "unit");
    if (j.contains("precision")) a.precision = optional_string(j, "precision");
    if (j.contains("accuracy")) a.accuracy = optional_string(j, "accuracy");
    return a;
}

MetadataRecord record_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ValidationError("record must be a JSON object");
    MetadataRecord r;
    r.record_id = RecordId::from_string(require_string(j, "record_id"));
    r.provider_key = require_string(j, "provider_key");
    r.local_identifier = require_string(j, "local_identifier");
    r.title = optional_string(j, "title");
    r.abstract = optional_string(j, "abstract");
    r.lineage = optional_string(j, "lineage");
    r.datestamp = instant_field(j, "datestamp");
    if (auto it = j.find("deleted"); it != j.end()) {
        if (!it->is_boolean()) throw ValidationError("field 'deleted' must be a boolean");
        r.deleted = it->get<bool>();
    }
    if (auto it = j.find("keywords"); it != j.end()) {
        if (!it->is_array()) throw ValidationError("field 'keywords' must be an array");
        for (const auto& k : *it) {
            if (!k.is_string()) throw ValidationError("keywords must be strings");
            r.keywords.push_back(k.get<std::string>());
        }
    }
    if (auto it = j.find("attributes"); it != j.end()) {
        if (!it->is_array()) throw ValidationError("field 'attributes' must be an array");
        for (const auto& a : *it) r.attributes.push_back(attribute_from_json(a));
    }
    if (auto it = j.find("spatial"); it != j.end() && !it->is_null()) r.spatial = spatial_from_json(*it);
    if (auto it = j.find("temporal"); it != j.end() && !it->is_null()) r.temporal = temporal_from_json(*it);
    if (auto it = j.find("source_url"); it != j.end() && !it->is_null()) r.source_url = optional_string(j, "source_url");
    return r;
}

} // namespace mercury
