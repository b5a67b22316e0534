#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "mercury/time.hpp"

namespace mercury::oai {

inline constexpr std::string_view kNamespace = "http://www.openarchives.org/OAI/2.0/";
inline constexpr std::string_view kOaiDcNamespace = "http://www.openarchives.org/OAI/2.0/oai_dc/";
inline constexpr std::string_view kDcNamespace = "http://purl.org/dc/elements/1.1/";

enum class Verb { Identify, ListMetadataFormats, ListSets, ListIdentifiers, ListRecords, GetRecord };

std::string_view verb_name(Verb verb);
std::optional<Verb> verb_from_name(std::string_view name);

enum class ErrorCode {
    badArgument,
    badResumptionToken,
    badVerb,
    cannotDisseminateFormat,
    idDoesNotExist,
    noRecordsMatch,
    noMetadataFormats,
    noSetHierarchy,
};

std::string_view error_code_name(ErrorCode code);
std::optional<ErrorCode> error_code_from_name(std::string_view name);

using Arguments = std::vector<std::pair<std::string, std::string>>;

struct HarvestRequest {
    std::string base_url;
    Verb verb = Verb::Identify;
    Arguments arguments;
};

/// Builds the GET URL "base?verb=V&name=value...", arguments in the given
/// order, values percent-encoded. Throws ProtocolUsageError naming the
/// offending argument when the combination is illegal for the verb.
std::string build_request(const HarvestRequest& request);

/// RFC 3986 percent-encoding (unreserved characters kept).
std::string percent_encode(std::string_view value);
/// Decodes %XX and '+' (as space). Malformed escapes are kept literally.
std::string percent_decode(std::string_view value);

struct OaiError {
    ErrorCode code = ErrorCode::badArgument;
    std::string message;

    friend bool operator==(const OaiError&, const OaiError&) = default;
};

struct ResumptionToken {
    std::string token;
    std::optional<std::uint64_t> complete_list_size;
    std::optional<std::uint64_t> cursor;

    friend bool operator==(const ResumptionToken&, const ResumptionToken&) = default;
};

struct RecordHeader {
    std::string identifier;
    Instant datestamp{};
    std::vector<std::string> set_specs;
    bool deleted = false;

    friend bool operator==(const RecordHeader&, const RecordHeader&) = default;
};

/// One harvested record. metadata_xml is absent exactly when deleted.
struct RawRecord {
    std::string identifier;
    Instant datestamp{};
    std::vector<std::string> set_specs;
    bool deleted = false;
    std::optional<std::string> metadata_xml;

    friend bool operator==(const RawRecord&, const RawRecord&) = default;
};

struct IdentifyInfo {
    std::string repository_name;
    std::string base_url;
    std::string protocol_version;
    std::vector<std::string> admin_emails;
    std::string earliest_datestamp;
    std::string deleted_record;
    Granularity granularity = Granularity::day;

    friend bool operator==(const IdentifyInfo&, const IdentifyInfo&) = default;
};

struct MetadataFormat {
    std::string prefix;
    std::string schema;
    std::string namespace_uri;

    friend bool operator==(const MetadataFormat&, const MetadataFormat&) = default;
};

struct SetInfo {
    std::string spec;
    std::string name;

    friend bool operator==(const SetInfo&, const SetInfo&) = default;
};

struct FormatList {
    std::vector<MetadataFormat> formats;
    friend bool operator==(const FormatList&, const FormatList&) = default;
};

struct SetList {
    std::vector<SetInfo> sets;
    friend bool operator==(const SetList&, const SetList&) = default;
};

struct RecordList {
    std::vector<RawRecord> records;
    friend bool operator==(const RecordList&, const RecordList&) = default;
};

/// ListIdentifiers payload.
struct HeaderList {
    std::vector<RecordHeader> headers;
    friend bool operator==(const HeaderList&, const HeaderList&) = default;
};

struct SingleRecord {
    RawRecord record;
    friend bool operator==(const SingleRecord&, const SingleRecord&) = default;
};

using Payload = std::variant<IdentifyInfo, FormatList, SetList, RecordList, HeaderList, SingleRecord, OaiError>;

struct Envelope {
    Instant response_date{};
    /// Text of the <request> element (the base URL).
    std::string request_echo;
    /// Attributes of the <request> element, in document order.
    Arguments request_arguments;
    Payload payload;
    std::optional<ResumptionToken> resumption;

    bool is_error() const noexcept { return std::holds_alternative<OaiError>(payload); }

    friend bool operator==(const Envelope&, const Envelope&) = default;
};

/// Parses an OAI-PMH 2.0 response. Throws XmlParseError (byte offset) for
/// non-well-formed input and StructureError for well-formed documents that do
/// not follow the response schema.
Envelope parse_envelope(std::string_view xml_text);

/// The resumption token of a List* response, if any. Throws UsageError for
/// other payloads.
std::optional<ResumptionToken> next_page(const Envelope& envelope);

/// Serializes an envelope as an OAI-PMH 2.0 document. Record datestamps are
/// written at `granularity`; metadata_xml is embedded verbatim.
std::string write_envelope(const Envelope& envelope, Granularity granularity = Granularity::seconds);

} // namespace mercury::oai
