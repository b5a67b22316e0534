#include "mercury/index.hpp"

#include <algorithm>
#include <cmath>
#include <locale.h>
#include <mutex>
#include <unordered_set>
#include <wctype.h>

#include "mercury/error.hpp"

namespace mercury {

namespace {

locale_t utf8_ctype() {
    static const locale_t loc = [] {
        locale_t l = newlocale(LC_CTYPE_MASK, "C.UTF-8", static_cast<locale_t>(nullptr));
        if (!l) l = newlocale(LC_CTYPE_MASK, "C.utf8", static_cast<locale_t>(nullptr));
        return l;
    }();
    return loc;
}

constexpr char32_t kInvalid = 0xFFFFFFFF;

// Decodes one UTF-8 sequence at `pos`, advancing it. Malformed input yields
// kInvalid and consumes a single byte.
char32_t next_code_point(std::string_view s, std::size_t& pos) {
    auto b0 = static_cast<unsigned char>(s[pos]);
    std::size_t len = 0;
    char32_t cp = 0;
    if (b0 < 0x80) {
        ++pos;
        return b0;
    } else if ((b0 & 0xE0) == 0xC0) {
        len = 2;
        cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
        len = 3;
        cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
        len = 4;
        cp = b0 & 0x07;
    } else {
        ++pos;
        return kInvalid;
    }
    if (pos + len > s.size()) {
        ++pos;
        return kInvalid;
    }
    for (std::size_t i = 1; i < len; ++i) {
        auto b = static_cast<unsigned char>(s[pos + i]);
        if ((b & 0xC0) != 0x80) {
            ++pos;
            return kInvalid;
        }
        cp = (cp << 6) | (b & 0x3F);
    }
    static constexpr char32_t kMin[] = {0, 0, 0x80, 0x800, 0x10000};
    if (cp < kMin[len] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
        ++pos;
        return kInvalid;
    }
    pos += len;
    return cp;
}

void append_utf8(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

bool is_alnum(char32_t cp) {
    if (cp == kInvalid) return false;
    if (cp < 0x80) return (cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z');
    locale_t loc = utf8_ctype();
    return loc && iswalnum_l(static_cast<wint_t>(cp), loc);
}

char32_t to_lower(char32_t cp) {
    if (cp < 0x80) return (cp >= 'A' && cp <= 'Z') ? cp + 32 : cp;
    locale_t loc = utf8_ctype();
    return loc ? static_cast<char32_t>(towlower_l(static_cast<wint_t>(cp), loc)) : cp;
}

struct Part {
    double west, east;
};

// Longitude ranges covered by a box; two when it crosses the antimeridian.
std::vector<Part> longitude_parts(const SpatialExtent& e) {
    if (!e.crosses_antimeridian()) return {{e.west, e.east}};
    return {{e.west, 180.0}, {-180.0, e.east}};
}

void count_terms(TermCounts& counts, std::string_view text) {
    for (auto& t : tokenize(text)) ++counts[std::move(t)];
}

} // namespace

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    std::string current;
    std::size_t pos = 0;
    while (pos < text.size()) {
        char32_t cp = next_code_point(text, pos);
        if (is_alnum(cp)) {
            append_utf8(current, to_lower(cp));
        } else if (!current.empty()) {
            out.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) out.push_back(std::move(current));
    return out;
}

std::string fold_case(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t start = pos;
        char32_t cp = next_code_point(text, pos);
        if (cp == kInvalid) {
            out.append(text.substr(start, pos - start));
        } else {
            append_utf8(out, to_lower(cp));
        }
    }
    return out;
}

std::vector<std::string> distinct_terms(std::string_view text) {
    std::vector<std::string> out;
    std::unordered_set<std::string> seen;
    for (auto& t : tokenize(text)) {
        if (seen.insert(t).second) out.push_back(std::move(t));
    }
    return out;
}

bool bbox_intersects(const SpatialExtent& a, const SpatialExtent& b) {
    if (a.south > b.north || a.north < b.south) return false;
    for (const auto& pa : longitude_parts(a)) {
        for (const auto& pb : longitude_parts(b)) {
            if (pa.west <= pb.east && pa.east >= pb.west) return true;
        }
    }
    return false;
}

bool temporal_overlaps(const TemporalExtent& a, const TemporalExtent& b) {
    return a.start <= b.end && a.end >= b.start;
}

std::uint64_t IndexDocument::weighted_tf(const std::string& term) const {
    std::uint64_t tf = 0;
    for (std::size_t f = 0; f < kFieldCount; ++f) {
        auto it = field_token_counts[f].find(term);
        if (it != field_token_counts[f].end()) tf += static_cast<std::uint64_t>(kFieldWeight[f]) * it->second;
    }
    return tf;
}

IndexDocument make_document(const MetadataRecord& r) {
    IndexDocument d;
    d.record_id = r.record_id;
    count_terms(d.field_token_counts[static_cast<std::size_t>(Field::title)], r.title);
    count_terms(d.field_token_counts[static_cast<std::size_t>(Field::abstract)], r.abstract);
    for (const auto& k : r.keywords) count_terms(d.field_token_counts[static_cast<std::size_t>(Field::keywords)], k);
    for (const auto& a : r.attributes) {
        count_terms(d.field_token_counts[static_cast<std::size_t>(Field::attribute_names)], a.name);
    }
    count_terms(d.field_token_counts[static_cast<std::size_t>(Field::lineage)], r.lineage);
    d.spatial = r.spatial;
    d.temporal = r.temporal;
    d.provider_key = r.provider_key;
    d.title = r.title;
    d.keywords_raw = r.keywords;
    d.datestamp = r.datestamp;
    return d;
}

double tf_idf(const IndexDocument& doc, const std::vector<std::string>& terms, std::size_t live_documents,
              const std::function<std::size_t(const std::string&)>& document_frequency) {
    double score = 0;
    for (const auto& t : terms) {
        std::size_t df = document_frequency(t);
        if (df == 0) continue;
        double idf = std::log(1.0 + static_cast<double>(live_documents) / static_cast<double>(df));
        score += static_cast<double>(doc.weighted_tf(t)) * idf;
    }
    return score;
}

nlohmann::json to_json(const SearchResult& result) {
    nlohmann::json hits = nlohmann::json::array();
    for (const auto& h : result.hits) {
        nlohmann::json j{{"record_id", h.record_id.str()},
                         {"score", h.score},
                         {"title", h.title},
                         {"provider_key", h.provider_key}};
        if (h.spatial) j["spatial"] = to_json(*h.spatial);
        if (h.temporal) j["temporal"] = to_json(*h.temporal);
        hits.push_back(std::move(j));
    }
    nlohmann::json providers = nlohmann::json::object();
    for (const auto& [k, n] : result.provider_facets) providers[k] = n;
    nlohmann::json keywords = nlohmann::json::array();
    for (const auto& k : result.keyword_facets) keywords.push_back({{"keyword", k.keyword}, {"count", k.count}});
    return {{"total", result.total},
            {"hits", std::move(hits)},
            {"facets", {{"providers", std::move(providers)}, {"keywords", std::move(keywords)}}}};
}

bool Index::upsert_document(const MetadataRecord& record) {
    if (record.deleted) throw UsageError("deleted records go through delete_document");
    IndexDocument doc = make_document(record);

    std::unique_lock lock(mutex_);
    Slot slot;
    if (auto it = slot_of_.find(record.record_id.str()); it != slot_of_.end()) {
        slot = it->second;
        if (record.datestamp < docs_[slot]->datestamp) return false;
        unlink_locked(slot);
    } else {
        if (!free_slots_.empty()) {
            slot = free_slots_.back();
            free_slots_.pop_back();
        } else {
            slot = static_cast<Slot>(docs_.size());
            docs_.emplace_back();
        }
        slot_of_.emplace(record.record_id.str(), slot);
        ++live_;
    }
    std::unordered_set<std::string> terms;
    for (const auto& counts : doc.field_token_counts) {
        for (const auto& [t, n] : counts) terms.insert(t);
    }
    for (const auto& t : terms) postings_[t][slot] = doc.weighted_tf(t);
    docs_[slot] = std::move(doc);
    return true;
}

void Index::unlink_locked(Slot slot) {
    const auto& doc = *docs_[slot];
    for (const auto& counts : doc.field_token_counts) {
        for (const auto& [t, n] : counts) {
            auto it = postings_.find(t);
            if (it == postings_.end()) continue;
            it->second.erase(slot);
            if (it->second.empty()) postings_.erase(it);
        }
    }
}

bool Index::delete_document(const RecordId& id) {
    std::unique_lock lock(mutex_);
    auto it = slot_of_.find(id.str());
    if (it == slot_of_.end()) return false;
    Slot slot = it->second;
    unlink_locked(slot);
    docs_[slot].reset();
    free_slots_.push_back(slot);
    slot_of_.erase(it);
    --live_;
    return true;
}

std::size_t Index::df_locked(const std::string& term) const {
    auto it = postings_.find(term);
    return it == postings_.end() ? 0 : it->second.size();
}

double Index::score_locked(Slot slot, const std::vector<std::string>& terms) const {
    return tf_idf(*docs_[slot], terms, live_, [this](const std::string& t) { return df_locked(t); });
}

double Index::score(const RecordId& id, const std::vector<std::string>& terms) const {
    std::shared_lock lock(mutex_);
    auto it = slot_of_.find(id.str());
    if (it == slot_of_.end()) return 0;
    return score_locked(it->second, terms);
}

SearchResult Index::search(const Query& query) const {
    if (query.page < 1) throw ValidationError("page must be ≥ 1");
    if (query.size < 1 || query.size > kMaxPageSize) throw ValidationError("size must be in [1, 100]");

    const auto terms = distinct_terms(query.terms_text);
    const std::optional<std::string> keyword = query.keyword_filter ? std::optional(fold_case(*query.keyword_filter))
                                                                    : std::nullopt;

    std::shared_lock lock(mutex_);

    auto passes = [&](const IndexDocument& d) {
        if (query.bbox && (!d.spatial || !bbox_intersects(*d.spatial, *query.bbox))) return false;
        if (query.interval && (!d.temporal || !temporal_overlaps(*d.temporal, *query.interval))) return false;
        if (query.provider_filter && d.provider_key != *query.provider_filter) return false;
        if (keyword) {
            bool found = std::any_of(d.keywords_raw.begin(), d.keywords_raw.end(),
                                     [&](const std::string& k) { return fold_case(k) == *keyword; });
            if (!found) return false;
        }
        return true;
    };

    struct Candidate {
        Slot slot;
        double score;
    };
    std::vector<Candidate> candidates;
    if (terms.empty()) {
        for (Slot s = 0; s < docs_.size(); ++s) {
            if (docs_[s] && passes(*docs_[s])) candidates.push_back({s, 0.0});
        }
    } else {
        std::unordered_set<Slot> matched;
        for (const auto& t : terms) {
            auto it = postings_.find(t);
            if (it == postings_.end()) continue;
            for (const auto& [slot, tf] : it->second) matched.insert(slot);
        }
        for (Slot s : matched) {
            if (!passes(*docs_[s])) continue;
            double sc = score_locked(s, terms);
            if (sc > 0) candidates.push_back({s, sc});
        }
    }

    if (terms.empty()) {
        std::sort(candidates.begin(), candidates.end(), [&](const Candidate& a, const Candidate& b) {
            const auto& da = *docs_[a.slot];
            const auto& db = *docs_[b.slot];
            if (da.datestamp != db.datestamp) return da.datestamp > db.datestamp;
            return da.record_id < db.record_id;
        });
    } else {
        std::sort(candidates.begin(), candidates.end(), [&](const Candidate& a, const Candidate& b) {
            if (a.score != b.score) return a.score > b.score;
            return docs_[a.slot]->record_id < docs_[b.slot]->record_id;
        });
    }

    SearchResult result;
    result.total = candidates.size();
    std::map<std::string, std::size_t> keyword_counts;
    for (const auto& c : candidates) {
        const auto& d = *docs_[c.slot];
        ++result.provider_facets[d.provider_key];
        for (const auto& k : d.keywords_raw) ++keyword_counts[k];
    }
    for (const auto& [k, n] : keyword_counts) result.keyword_facets.push_back({k, n});
    std::stable_sort(result.keyword_facets.begin(), result.keyword_facets.end(),
                     [](const KeywordCount& a, const KeywordCount& b) { return a.count > b.count; });
    if (result.keyword_facets.size() > kKeywordFacetLimit) result.keyword_facets.resize(kKeywordFacetLimit);

    const std::size_t begin = (query.page - 1) * query.size;
    for (std::size_t i = begin; i < candidates.size() && i < begin + query.size; ++i) {
        const auto& d = *docs_[candidates[i].slot];
        result.hits.push_back(Hit{d.record_id, candidates[i].score, d.title, d.provider_key, d.spatial, d.temporal});
    }
    return result;
}

std::size_t Index::size() const {
    std::shared_lock lock(mutex_);
    return live_;
}

bool Index::contains(const RecordId& id) const {
    std::shared_lock lock(mutex_);
    return slot_of_.count(id.str()) != 0;
}

std::optional<Instant> Index::datestamp_of(const RecordId& id) const {
    std::shared_lock lock(mutex_);
    auto it = slot_of_.find(id.str());
    if (it == slot_of_.end()) return std::nullopt;
    return docs_[it->second]->datestamp;
}

std::vector<RecordId> Index::live_ids() const {
    std::shared_lock lock(mutex_);
    std::vector<RecordId> out;
    out.reserve(live_);
    for (const auto& d : docs_) {
        if (d) out.push_back(d->record_id);
    }
    std::sort(out.begin(), out.end());
    return out;
}

void Index::clear() {
    std::unique_lock lock(mutex_);
    docs_.clear();
    free_slots_.clear();
    slot_of_.clear();
    postings_.clear();
    live_ = 0;
}

} // namespace mercury
