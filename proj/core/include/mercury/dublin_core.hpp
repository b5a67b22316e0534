#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mercury/model.hpp"
#include "mercury/oai.hpp"

namespace mercury::dc {

/// Namespace of the attribute/lineage extension elements.
inline constexpr std::string_view kExtensionNamespace = "urn:mercury-harvest:profile:1";

/// A MetadataRecord before the harvester assigns provider and id.
struct DraftRecord {
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
    std::vector<std::string> parse_warnings;

    friend bool operator==(const DraftRecord&, const DraftRecord&) = default;
};

/// Maps an oai_dc payload (plus extension elements) onto a draft. Field
/// problems become warnings; only non-well-formed XML throws (XmlParseError).
/// Throws UsageError for deleted records.
DraftRecord parse_record(const oai::RawRecord& raw);

/// Completes a draft into a canonical record for `provider_key`.
MetadataRecord finalize(const DraftRecord& draft, std::string_view provider_key);

/// "YYYY-MM-DD/YYYY-MM-DD", a single "YYYY-MM-DD", or "start=...; end=...;".
/// Dates expand to whole days. Throws ShapeError or OrderError.
TemporalExtent parse_temporal(std::string_view text);

/// "northlimit=N; southlimit=S; westlimit=W; eastlimit=E" (any order, names
/// case-insensitive, extra pairs ignored), checked through normalize_bbox.
/// Throws ShapeError, RangeError or OrderError.
SpatialExtent parse_spatial(std::string_view text);

/// Coverage dispatch: true when the text names any of the four *limit keys.
bool looks_spatial(std::string_view text);

} // namespace mercury::dc
