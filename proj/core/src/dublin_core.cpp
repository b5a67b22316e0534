#include "mercury/dublin_core.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <map>

#include "mercury/error.hpp"
#include "mercury/xml.hpp"

namespace mercury::dc {

namespace {

using oai::kDcNamespace;

constexpr std::string_view kLimitNames[] = {"northlimit", "southlimit", "westlimit", "eastlimit"};

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

// Splits "a=1; b=2;" into lowercase-name -> trimmed value, first occurrence wins.
std::map<std::string, std::string> name_values(std::string_view text) {
    std::map<std::string, std::string> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto end = text.find(';', pos);
        if (end == std::string_view::npos) end = text.size();
        auto piece = text.substr(pos, end - pos);
        auto eq = piece.find('=');
        if (eq != std::string_view::npos) {
            auto name = lower(trim(piece.substr(0, eq)));
            if (!name.empty()) out.emplace(std::move(name), trim(piece.substr(eq + 1)));
        }
        pos = end + 1;
    }
    return out;
}

double parse_degrees(const std::string& name, const std::string& value) {
    double v = 0;
    const char* first = value.data();
    const char* last = value.data() + value.size();
    if (!value.empty() && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (value.empty() || ec != std::errc{} || ptr != last) {
        throw ShapeError(name + " is not a decimal number: '" + value + "'");
    }
    return v;
}

Instant bound(std::string_view text, bool is_end) {
    auto t = trim(text);
    if (t.empty()) throw ShapeError("empty temporal bound");
    return parse_date_or_time(t, is_end);
}

bool is_url(std::string_view text) {
    auto l = lower(text.substr(0, std::min<std::size_t>(text.size(), 8)));
    std::size_t scheme = 0;
    if (l.rfind("http://", 0) == 0) {
        scheme = 7;
    } else if (l.rfind("https://", 0) == 0) {
        scheme = 8;
    } else if (l.rfind("ftp://", 0) == 0) {
        scheme = 6;
    } else {
        return false;
    }
    if (text.size() <= scheme) return false;
    return std::none_of(text.begin(), text.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}

struct Collector {
    DraftRecord& draft;
    bool have_title = false;
    std::vector<std::string> descriptions;
    std::vector<std::string> lineage;
    std::vector<std::string> subjects;

    void dublin_core(const xml::Element& e) {
        auto text = trim(e.text());
        if (e.local == "title") {
            if (!have_title) {
                have_title = !text.empty();
                draft.title = text;
            } else {
                draft.parse_warnings.push_back("extra title ignored: '" + text + "'");
            }
        } else if (e.local == "description") {
            if (!text.empty()) descriptions.push_back(std::move(text));
        } else if (e.local == "subject") {
            subjects.push_back(std::move(text));
        } else if (e.local == "coverage") {
            coverage(text);
        } else if (e.local == "source" || e.local == "identifier") {
            if (!draft.source_url && is_url(text)) draft.source_url = std::move(text);
        }
    }

    void coverage(const std::string& text) {
        if (looks_spatial(text)) {
            try {
                auto box = parse_spatial(text);
                if (draft.spatial) {
                    draft.parse_warnings.push_back("additional spatial coverage ignored: '" + text + "'");
                } else {
                    draft.spatial = box;
                }
            } catch (const ValidationError& e) {
                draft.parse_warnings.push_back("invalid spatial coverage '" + text + "': " + e.what());
            }
            return;
        }
        try {
            auto interval = parse_temporal(text);
            if (draft.temporal) {
                draft.parse_warnings.push_back("additional temporal coverage ignored: '" + text + "'");
            } else {
                draft.temporal = interval;
            }
        } catch (const OrderError& e) {
            draft.parse_warnings.push_back("invalid temporal coverage '" + text + "': " + e.what());
        } catch (const ShapeError&) {
            draft.parse_warnings.push_back("unrecognized coverage '" + text + "'");
        }
    }

    void attribute(const xml::Element& e) {
        auto field = [&](std::string_view name) -> std::optional<std::string> {
            const auto* child = e.first_child(kExtensionNamespace, name);
            if (!child) return std::nullopt;
            return trim(child->text());
        };
        Attribute a;
        a.name = field("name").value_or("");
        a.unit = field("unit").value_or("");
        a.precision = field("precision");
        a.accuracy = field("accuracy");
        if (a.name.empty()) {
            draft.parse_warnings.emplace_back("attribute without name skipped");
            return;
        }
        draft.attributes.push_back(std::move(a));
    }

    void walk(const xml::Element& e) {
        if (e.ns == kDcNamespace) {
            dublin_core(e);
            return;
        }
        if (e.ns == kExtensionNamespace) {
            if (e.local == "attribute") {
                attribute(e);
                return;
            }
            if (e.local == "lineage") {
                auto text = trim(e.text());
                if (!text.empty()) lineage.push_back(std::move(text));
                return;
            }
        }
        for (const auto* child : e.child_elements()) walk(*child);
    }
};

std::string join_paragraphs(const std::vector<std::string>& parts) {
    std::string out;
    for (const auto& p : parts) {
        if (!out.empty()) out += "\n\n";
        out += p;
    }
    return out;
}

} // namespace

bool looks_spatial(std::string_view text) {
    auto l = lower(text);
    return std::any_of(std::begin(kLimitNames), std::end(kLimitNames),
                       [&](std::string_view name) { return l.find(std::string(name) + "=") != std::string::npos ||
                                                           l.find(std::string(name) + " =") != std::string::npos; });
}

SpatialExtent parse_spatial(std::string_view text) {
    auto pairs = name_values(text);
    std::string absent;
    for (auto name : kLimitNames) {
        if (!pairs.count(std::string(name))) absent += (absent.empty() ? "" : ", ") + std::string(name);
    }
    if (!absent.empty()) throw ShapeError("spatial coverage missing " + absent);
    return normalize_bbox(parse_degrees("westlimit", pairs["westlimit"]), parse_degrees("southlimit", pairs["southlimit"]),
                          parse_degrees("eastlimit", pairs["eastlimit"]), parse_degrees("northlimit", pairs["northlimit"]));
}

TemporalExtent parse_temporal(std::string_view raw) {
    auto text = trim(raw);
    TemporalExtent out;
    if (text.find('=') != std::string::npos) {
        auto pairs = name_values(text);
        if (!pairs.count("start") || !pairs.count("end")) throw ShapeError("period needs start= and end=");
        out = {bound(pairs["start"], false), bound(pairs["end"], true)};
    } else if (auto slash = text.find('/'); slash != std::string::npos) {
        out = {bound(std::string_view(text).substr(0, slash), false),
               bound(std::string_view(text).substr(slash + 1), true)};
    } else {
        out = {bound(text, false), bound(text, true)};
    }
    if (out.start > out.end) throw OrderError("temporal start is after end");
    return out;
}

DraftRecord parse_record(const oai::RawRecord& raw) {
    if (raw.deleted) throw UsageError("parse_record called on a deleted record");
    if (!raw.metadata_xml) throw UsageError("record has no metadata payload");
    auto root = xml::parse(*raw.metadata_xml);

    DraftRecord draft;
    draft.local_identifier = raw.identifier;
    draft.datestamp = raw.datestamp;
    draft.deleted = false;

    Collector c{draft, false, {}, {}, {}};
    c.walk(*root);
    draft.abstract = join_paragraphs(c.descriptions);
    draft.lineage = join_paragraphs(c.lineage);
    draft.keywords = dedupe_keywords(c.subjects);
    if (draft.title.empty()) draft.parse_warnings.emplace_back("missing title");
    return draft;
}

MetadataRecord finalize(const DraftRecord& draft, std::string_view provider_key) {
    MetadataRecord r;
    r.record_id = make_record_id(provider_key, draft.local_identifier);
    r.provider_key = std::string(provider_key);
    r.local_identifier = draft.local_identifier;
    r.title = draft.title;
    r.abstract = draft.abstract;
    r.keywords = dedupe_keywords(draft.keywords);
    r.attributes = draft.attributes;
    r.lineage = draft.lineage;
    r.spatial = draft.spatial;
    r.temporal = draft.temporal;
    r.source_url = draft.source_url;
    r.datestamp = draft.datestamp;
    r.deleted = draft.deleted;
    return r;
}

} // namespace mercury::dc
