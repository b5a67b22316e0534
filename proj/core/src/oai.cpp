#include "mercury/oai.hpp"

#include <algorithm>
#include <array>
#include <charconv>

#include "mercury/error.hpp"
#include "mercury/model.hpp"
#include "mercury/xml.hpp"

namespace mercury::oai {

namespace {

constexpr std::array<std::string_view, 6> kVerbNames = {"Identify",        "ListMetadataFormats", "ListSets",
                                                        "ListIdentifiers", "ListRecords",         "GetRecord"};

constexpr std::array<std::string_view, 8> kErrorNames = {
    "badArgument",    "badResumptionToken", "badVerb",           "cannotDisseminateFormat",
    "idDoesNotExist", "noRecordsMatch",     "noMetadataFormats", "noSetHierarchy"};

constexpr std::array<std::string_view, 6> kArgumentNames = {"metadataPrefix", "from",       "until",
                                                            "set",            "identifier", "resumptionToken"};

struct ArgumentRule {
    std::vector<std::string_view> allowed;
    std::vector<std::string_view> required;
    bool accepts_token;
};

ArgumentRule rule_for(Verb verb) {
    switch (verb) {
        case Verb::Identify: return {{}, {}, false};
        case Verb::ListMetadataFormats: return {{"identifier"}, {}, false};
        case Verb::ListSets: return {{}, {}, true};
        case Verb::ListIdentifiers:
        case Verb::ListRecords: return {{"metadataPrefix", "from", "until", "set"}, {"metadataPrefix"}, true};
        case Verb::GetRecord: return {{"identifier", "metadataPrefix"}, {"identifier", "metadataPrefix"}, false};
    }
    return {};
}

bool contains(const std::vector<std::string_view>& names, std::string_view n) {
    return std::find(names.begin(), names.end(), n) != names.end();
}

[[noreturn]] void missing(std::string_view what) { throw StructureError("missing element " + std::string(what)); }

const xml::Element& require_child(const xml::Element& parent, std::string_view name) {
    const auto* child = parent.first_child(kNamespace, name);
    if (!child) missing(name);
    return *child;
}

std::string child_text(const xml::Element& parent, std::string_view name) {
    return trim(require_child(parent, name).text());
}

Instant parse_stamp(const std::string& text, std::string_view element) {
    try {
        return parse_datestamp(text).instant;
    } catch (const ShapeError&) {
        throw StructureError("malformed " + std::string(element) + " '" + text + "'");
    }
}

std::optional<std::uint64_t> count_attribute(const xml::Element& e, std::string_view name) {
    auto v = e.attribute(name);
    if (!v) return std::nullopt;
    std::uint64_t out = 0;
    auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
    if (ec != std::errc{} || ptr != v->data() + v->size() || v->empty()) {
        throw StructureError("malformed resumptionToken attribute " + std::string(name));
    }
    return out;
}

RecordHeader parse_header(const xml::Element& header) {
    RecordHeader h;
    h.identifier = child_text(header, "identifier");
    h.datestamp = parse_stamp(child_text(header, "datestamp"), "datestamp");
    for (const auto* s : header.children_named(kNamespace, "setSpec")) h.set_specs.push_back(trim(s->text()));
    if (auto status = header.attribute("status")) h.deleted = *status == "deleted";
    return h;
}

RawRecord parse_record(const xml::Element& record) {
    RecordHeader h = parse_header(require_child(record, "header"));
    RawRecord r{std::move(h.identifier), h.datestamp, std::move(h.set_specs), h.deleted, std::nullopt};
    if (r.deleted) return r;
    const auto& metadata = require_child(record, "metadata");
    auto content = metadata.child_elements();
    if (content.empty()) missing("metadata content");
    r.metadata_xml = xml::serialize(*content.front());
    return r;
}

std::optional<ResumptionToken> parse_token(const xml::Element& list) {
    const auto* t = list.first_child(kNamespace, "resumptionToken");
    if (!t) return std::nullopt;
    auto text = trim(t->text());
    if (text.empty()) return std::nullopt;
    return ResumptionToken{std::move(text), count_attribute(*t, "completeListSize"), count_attribute(*t, "cursor")};
}

IdentifyInfo parse_identify(const xml::Element& e) {
    IdentifyInfo info;
    info.repository_name = child_text(e, "repositoryName");
    info.base_url = child_text(e, "baseURL");
    info.protocol_version = child_text(e, "protocolVersion");
    for (const auto* a : e.children_named(kNamespace, "adminEmail")) info.admin_emails.push_back(trim(a->text()));
    info.earliest_datestamp = child_text(e, "earliestDatestamp");
    info.deleted_record = child_text(e, "deletedRecord");
    auto granularity = child_text(e, "granularity");
    if (granularity == granularity_name(Granularity::day)) {
        info.granularity = Granularity::day;
    } else if (granularity == granularity_name(Granularity::seconds)) {
        info.granularity = Granularity::seconds;
    } else {
        throw StructureError("unknown granularity '" + granularity + "'");
    }
    return info;
}

OaiError parse_error(const xml::Element& e) {
    auto code = e.attribute("code");
    if (!code) throw StructureError("error element missing attribute code");
    auto mapped = error_code_from_name(*code);
    if (!mapped) throw StructureError("unknown error code '" + *code + "'");
    return OaiError{*mapped, trim(e.text())};
}

using Attrs = std::vector<std::pair<std::string, std::string>>;

void write_header(xml::Writer& w, const std::string& identifier, Instant datestamp,
                  const std::vector<std::string>& sets, bool deleted, Granularity g) {
    Attrs attrs;
    if (deleted) attrs.emplace_back("status", "deleted");
    w.open("header", attrs);
    w.leaf("identifier", identifier);
    w.leaf("datestamp", format_datestamp(datestamp, g));
    for (const auto& s : sets) w.leaf("setSpec", s);
    w.close();
}

void write_record(xml::Writer& w, const RawRecord& r, Granularity g) {
    w.open("record");
    write_header(w, r.identifier, r.datestamp, r.set_specs, r.deleted, g);
    if (!r.deleted && r.metadata_xml) {
        w.open("metadata").raw(*r.metadata_xml).close();
    }
    w.close();
}

void write_token(xml::Writer& w, const std::optional<ResumptionToken>& token) {
    if (!token) return;
    Attrs attrs;
    if (token->complete_list_size) attrs.emplace_back("completeListSize", std::to_string(*token->complete_list_size));
    if (token->cursor) attrs.emplace_back("cursor", std::to_string(*token->cursor));
    w.leaf("resumptionToken", token->token, attrs);
}

} // namespace

std::string_view verb_name(Verb verb) { return kVerbNames[static_cast<std::size_t>(verb)]; }

std::optional<Verb> verb_from_name(std::string_view name) {
    for (std::size_t i = 0; i < kVerbNames.size(); ++i) {
        if (kVerbNames[i] == name) return static_cast<Verb>(i);
    }
    return std::nullopt;
}

std::string_view error_code_name(ErrorCode code) { return kErrorNames[static_cast<std::size_t>(code)]; }

std::optional<ErrorCode> error_code_from_name(std::string_view name) {
    for (std::size_t i = 0; i < kErrorNames.size(); ++i) {
        if (kErrorNames[i] == name) return static_cast<ErrorCode>(i);
    }
    return std::nullopt;
}

std::string percent_encode(std::string_view value) {
    static constexpr char hex[] = "0123456789ABCDEF";
    std::string out;
    out.reserve(value.size());
    for (unsigned char c : value) {
        if ((c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-' || c == '.' ||
            c == '_' || c == '~') {
            out.push_back(static_cast<char>(c));
        } else {
            out.push_back('%');
            out.push_back(hex[c >> 4]);
            out.push_back(hex[c & 0xF]);
        }
    }
    return out;
}

std::string percent_decode(std::string_view value) {
    auto nibble = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        return -1;
    };
    std::string out;
    out.reserve(value.size());
    for (std::size_t i = 0; i < value.size(); ++i) {
        char c = value[i];
        if (c == '+') {
            out.push_back(' ');
        } else if (c == '%' && i + 2 < value.size() && nibble(value[i + 1]) >= 0 && nibble(value[i + 2]) >= 0) {
            out.push_back(static_cast<char>(nibble(value[i + 1]) * 16 + nibble(value[i + 2])));
            i += 2;
        } else {
            out.push_back(c);
        }
    }
    return out;
}

std::string build_request(const HarvestRequest& request) {
    const ArgumentRule rule = rule_for(request.verb);
    const std::string verb(verb_name(request.verb));
    std::vector<std::string_view> seen;
    bool has_token = false;
    for (const auto& [name, value] : request.arguments) {
        if (std::find(kArgumentNames.begin(), kArgumentNames.end(), name) == kArgumentNames.end()) {
            throw ProtocolUsageError(name, "unknown argument '" + name + "'");
        }
        if (contains(seen, name)) throw ProtocolUsageError(name, "argument '" + name + "' repeated");
        if (value.empty()) throw ProtocolUsageError(name, "argument '" + name + "' has an empty value");
        seen.push_back(name);
        if (name == "resumptionToken") has_token = true;
    }
    if (has_token) {
        if (!rule.accepts_token) {
            throw ProtocolUsageError("resumptionToken", "resumptionToken is not legal for " + verb);
        }
        if (request.arguments.size() > 1) {
            throw ProtocolUsageError("resumptionToken", "resumptionToken is exclusive; no other argument may appear");
        }
    } else {
        for (const auto& [name, value] : request.arguments) {
            if (!contains(rule.allowed, name)) {
                throw ProtocolUsageError(name, "argument '" + name + "' is not legal for " + verb);
            }
        }
        for (auto name : rule.required) {
            if (!contains(seen, name)) {
                throw ProtocolUsageError(std::string(name), verb + " requires argument '" + std::string(name) + "'");
            }
        }
        std::optional<ParsedDatestamp> from, until;
        for (const auto& [name, value] : request.arguments) {
            if (name != "from" && name != "until") continue;
            try {
                (name == "from" ? from : until) = parse_datestamp(value);
            } catch (const ShapeError&) {
                throw ProtocolUsageError(name, "argument '" + name + "' is not a valid datestamp");
            }
        }
        if (from && until) {
            if (from->granularity != until->granularity) {
                throw ProtocolUsageError("until", "from and until have different granularities");
            }
            if (from->instant > until->instant) throw ProtocolUsageError("until", "until is earlier than from");
        }
    }

    std::string url = request.base_url + "?verb=" + verb;
    for (const auto& [name, value] : request.arguments) {
        url += '&';
        url += name;
        url += '=';
        url += percent_encode(value);
    }
    return url;
}

Envelope parse_envelope(std::string_view xml_text) {
    auto root = xml::parse(xml_text);
    if (!root->is(kNamespace, "OAI-PMH")) throw StructureError("expected root element OAI-PMH");

    Envelope env;
    env.response_date = parse_stamp(child_text(*root, "responseDate"), "responseDate");
    const auto& request = require_child(*root, "request");
    env.request_echo = trim(request.text());
    for (const auto& a : request.attributes) {
        if (a.ns.empty()) env.request_arguments.emplace_back(a.local, a.value);
    }

    if (const auto* error = root->first_child(kNamespace, "error")) {
        env.payload = parse_error(*error);
        return env;
    }

    const xml::Element* body = nullptr;
    for (const auto* child : root->child_elements()) {
        if (child->ns == kNamespace && verb_from_name(child->local)) {
            body = child;
            break;
        }
    }
    if (!body) {
        std::string expected = "payload";
        for (const auto& [k, v] : env.request_arguments) {
            if (k == "verb") expected = v;
        }
        missing(expected);
    }

    switch (*verb_from_name(body->local)) {
        case Verb::Identify: env.payload = parse_identify(*body); break;
        case Verb::ListMetadataFormats: {
            FormatList list;
            for (const auto* f : body->children_named(kNamespace, "metadataFormat")) {
                list.formats.push_back(MetadataFormat{child_text(*f, "metadataPrefix"), child_text(*f, "schema"),
                                                      child_text(*f, "metadataNamespace")});
            }
            env.payload = std::move(list);
            break;
        }
        case Verb::ListSets: {
            SetList list;
            for (const auto* s : body->children_named(kNamespace, "set")) {
                list.sets.push_back(SetInfo{child_text(*s, "setSpec"), child_text(*s, "setName")});
            }
            env.payload = std::move(list);
            env.resumption = parse_token(*body);
            break;
        }
        case Verb::ListIdentifiers: {
            HeaderList list;
            for (const auto* h : body->children_named(kNamespace, "header")) list.headers.push_back(parse_header(*h));
            env.payload = std::move(list);
            env.resumption = parse_token(*body);
            break;
        }
        case Verb::ListRecords: {
            RecordList list;
            for (const auto* r : body->children_named(kNamespace, "record")) list.records.push_back(parse_record(*r));
            env.payload = std::move(list);
            env.resumption = parse_token(*body);
            break;
        }
        case Verb::GetRecord: env.payload = SingleRecord{parse_record(require_child(*body, "record"))}; break;
    }
    return env;
}

std::optional<ResumptionToken> next_page(const Envelope& envelope) {
    const bool is_list = std::holds_alternative<RecordList>(envelope.payload) ||
                         std::holds_alternative<HeaderList>(envelope.payload) ||
                         std::holds_alternative<SetList>(envelope.payload) ||
                         std::holds_alternative<FormatList>(envelope.payload);
    if (!is_list) throw UsageError("next_page requires a List* response");
    return envelope.resumption;
}

std::string write_envelope(const Envelope& env, Granularity g) {
    xml::Writer w;
    w.declaration();
    w.open("OAI-PMH", {{"xmlns", std::string(kNamespace)},
                       {"xmlns:xsi", "http://www.w3.org/2001/XMLSchema-instance"},
                       {"xsi:schemaLocation",
                        "http://www.openarchives.org/OAI/2.0/ http://www.openarchives.org/OAI/2.0/OAI-PMH.xsd"}});
    w.leaf("responseDate", format_rfc3339(env.response_date));
    w.leaf("request", env.request_echo, env.request_arguments);

    std::visit(
        [&](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, OaiError>) {
                w.leaf("error", p.message, {{"code", std::string(error_code_name(p.code))}});
            } else if constexpr (std::is_same_v<T, IdentifyInfo>) {
                w.open("Identify");
                w.leaf("repositoryName", p.repository_name);
                w.leaf("baseURL", p.base_url);
                w.leaf("protocolVersion", p.protocol_version);
                for (const auto& a : p.admin_emails) w.leaf("adminEmail", a);
                w.leaf("earliestDatestamp", p.earliest_datestamp);
                w.leaf("deletedRecord", p.deleted_record);
                w.leaf("granularity", granularity_name(p.granularity));
                w.close();
            } else if constexpr (std::is_same_v<T, FormatList>) {
                w.open("ListMetadataFormats");
                for (const auto& f : p.formats) {
                    w.open("metadataFormat");
                    w.leaf("metadataPrefix", f.prefix);
                    w.leaf("schema", f.schema);
                    w.leaf("metadataNamespace", f.namespace_uri);
                    w.close();
                }
                w.close();
            } else if constexpr (std::is_same_v<T, SetList>) {
                w.open("ListSets");
                for (const auto& s : p.sets) {
                    w.open("set").leaf("setSpec", s.spec).leaf("setName", s.name).close();
                }
                write_token(w, env.resumption);
                w.close();
            } else if constexpr (std::is_same_v<T, HeaderList>) {
                w.open("ListIdentifiers");
                for (const auto& h : p.headers) write_header(w, h.identifier, h.datestamp, h.set_specs, h.deleted, g);
                write_token(w, env.resumption);
                w.close();
            } else if constexpr (std::is_same_v<T, RecordList>) {
                w.open("ListRecords");
                for (const auto& r : p.records) write_record(w, r, g);
                write_token(w, env.resumption);
                w.close();
            } else if constexpr (std::is_same_v<T, SingleRecord>) {
                w.open("GetRecord");
                write_record(w, p.record, g);
                w.close();
            }
        },
        env.payload);
    w.close();
    w.raw("\n");
    return w.take();
}

} // namespace mercury::oai
