#pragma once

#include <compare>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "mercury/time.hpp"

namespace mercury {

/// Lat/lon bounding box in degrees. west > east is legal and means the box
/// crosses the antimeridian.
struct SpatialExtent {
    double west = 0;
    double south = 0;
    double east = 0;
    double north = 0;

    bool crosses_antimeridian() const noexcept { return west > east; }

    friend bool operator==(const SpatialExtent&, const SpatialExtent&) = default;
};

/// Closed UTC interval.
struct TemporalExtent {
    Instant start;
    Instant end;

    friend bool operator==(const TemporalExtent&, const TemporalExtent&) = default;
};

/// A measured attribute of a dataset. Precision and accuracy stay free text
/// ("±0.5 °C", "5%").
struct Attribute {
    std::string name;
    std::string unit;
    std::optional<std::string> precision;
    std::optional<std::string> accuracy;

    friend bool operator==(const Attribute&, const Attribute&) = default;
};

/// Globally unique record key: "<provider_key>:<percent-encoded local id>".
class RecordId {
public:
    RecordId() = default;

    /// Wraps an already-formed id without checking it. Use make_record_id to
    /// build one from parts.
    static RecordId from_string(std::string text) {
        RecordId id;
        id.value_ = std::move(text);
        return id;
    }

    const std::string& str() const noexcept { return value_; }
    bool empty() const noexcept { return value_.empty(); }

    friend auto operator<=>(const RecordId&, const RecordId&) = default;

private:
    std::string value_;
};

struct MetadataRecord {
    RecordId record_id;
    std::string provider_key;
    std::string local_identifier;
    std::string title;
    std::string abstract;
    std::vector<std::string> keywords;
    std::vector<Attribute> attributes;
    std::string lineage;
    std::optional<SpatialExtent> spatial;
    std::optional<TemporalExtent> temporal;
    std::optional<std::string> source_url;
    Instant datestamp{};
    bool deleted = false;

    friend bool operator==(const MetadataRecord&, const MetadataRecord&) = default;
};

/// True when `key` matches [a-z0-9_-]+.
bool is_valid_provider_key(std::string_view key) noexcept;

/// Percent-encodes every byte outside [A-Za-z0-9._-] as %XX (uppercase hex)
/// and prefixes "<provider_key>:". Throws ValidationError on a malformed key or
/// an empty identifier.
RecordId make_record_id(std::string_view provider_key, std::string_view local_identifier);

/// Outcome of validate_record: the record when every invariant holds,
/// otherwise every violated invariant.
struct Validation {
    std::optional<MetadataRecord> record;
    std::vector<std::string> violations;

    bool ok() const noexcept { return violations.empty(); }
};

Validation validate_record(const MetadataRecord& record);

/// Range- and order-checks a box. Longitudes of exactly ±180 on a
/// non-crossing box are canonicalized to west=-180 / east=+180.
/// Throws RangeError or OrderError.
SpatialExtent normalize_bbox(double west, double south, double east, double north);

/// Removes duplicates (case-sensitive) and blank entries, keeping first
/// occurrences in order. Entries are trimmed.
std::vector<std::string> dedupe_keywords(const std::vector<std::string>& keywords);

std::string trim(std::string_view text);

// Canonical JSON wire form: snake_case field names, RFC 3339 instants,
// absent optionals omitted.
nlohmann::json to_json(const SpatialExtent& extent);
nlohmann::json to_json(const TemporalExtent& extent);
nlohmann::json to_json(const Attribute& attribute);
nlohmann::json to_json(const MetadataRecord& record);

SpatialExtent spatial_from_json(const nlohmann::json& j);
TemporalExtent temporal_from_json(const nlohmann::json& j);
Attribute attribute_from_json(const nlohmann::json& j);
/// Throws ValidationError when a required field is missing or mistyped.
MetadataRecord record_from_json(const nlohmann::json& j);

} // namespace mercury
