#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "mercury/model.hpp"

namespace mercury {

/// Lowercases (simple case mapping) and splits on every code point that is
/// not a letter or digit. No stemming, no stopwords.
std::vector<std::string> tokenize(std::string_view text);

/// Simple per-code-point lowercase of UTF-8 text.
std::string fold_case(std::string_view text);

/// Closed-box intersection; crossing boxes are split at the antimeridian.
bool bbox_intersects(const SpatialExtent& a, const SpatialExtent& b);

/// Closed-interval overlap.
bool temporal_overlaps(const TemporalExtent& a, const TemporalExtent& b);

enum class Field : std::size_t { title, abstract, keywords, attribute_names, lineage };
inline constexpr std::size_t kFieldCount = 5;

/// Per-field weights in the term-frequency sum.
inline constexpr int kFieldWeight[kFieldCount] = {3, 1, 2, 1, 1};

using TermCounts = std::map<std::string, std::uint32_t>;

struct IndexDocument {
    RecordId record_id;
    TermCounts field_token_counts[kFieldCount];
    std::optional<SpatialExtent> spatial;
    std::optional<TemporalExtent> temporal;
    std::string provider_key;
    std::string title;
    std::vector<std::string> keywords_raw;
    Instant datestamp{};

    /// Weighted term frequency: Σ weight(field) · count(term, field).
    std::uint64_t weighted_tf(const std::string& term) const;
};

IndexDocument make_document(const MetadataRecord& record);

struct Query {
    std::string terms_text;
    std::optional<SpatialExtent> bbox;
    std::optional<TemporalExtent> interval;
    std::optional<std::string> provider_filter;
    std::optional<std::string> keyword_filter;
    std::size_t page = 1;
    std::size_t size = 10;
};

inline constexpr std::size_t kMaxPageSize = 100;
inline constexpr std::size_t kKeywordFacetLimit = 20;

struct Hit {
    RecordId record_id;
    double score = 0;
    std::string title;
    std::string provider_key;
    std::optional<SpatialExtent> spatial;
    std::optional<TemporalExtent> temporal;
};

struct KeywordCount {
    std::string keyword;
    std::size_t count = 0;
};

struct SearchResult {
    std::size_t total = 0;
    std::vector<Hit> hits;
    std::map<std::string, std::size_t> provider_facets;
    std::vector<KeywordCount> keyword_facets;
};

nlohmann::json to_json(const SearchResult& result);

/// In-memory inverted index. Writers (upsert/remove) are serialized; any
/// number of searches may run concurrently and see a state between writes.
class Index {
public:
    Index() = default;
    Index(const Index&) = delete;
    Index& operator=(const Index&) = delete;

    /// Inserts or replaces the record's document when its datestamp is at
    /// least the stored one. Returns whether the index changed. Throws
    /// UsageError for deleted records.
    bool upsert_document(const MetadataRecord& record);

    /// Removes the document; returns whether it was present.
    bool delete_document(const RecordId& id);

    /// Throws ValidationError when page or size is out of range.
    SearchResult search(const Query& query) const;

    /// Score of one stored document for the distinct terms (0 if absent).
    double score(const RecordId& id, const std::vector<std::string>& distinct_terms) const;

    std::size_t size() const;
    bool contains(const RecordId& id) const;
    std::optional<Instant> datestamp_of(const RecordId& id) const;
    std::vector<RecordId> live_ids() const;
    void clear();

private:
    using Slot = std::uint32_t;

    double score_locked(Slot slot, const std::vector<std::string>& terms) const;
    std::size_t df_locked(const std::string& term) const;
    void unlink_locked(Slot slot);

    mutable std::shared_mutex mutex_;
    std::vector<std::optional<IndexDocument>> docs_;
    std::vector<Slot> free_slots_;
    std::unordered_map<std::string, Slot> slot_of_;
    // term -> slot -> weighted term frequency
    std::unordered_map<std::string, std::unordered_map<Slot, std::uint64_t>> postings_;
    std::size_t live_ = 0;
};

/// Distinct terms of tokenize(text) in first-appearance order.
std::vector<std::string> distinct_terms(std::string_view text);

/// The scoring rule on its own: Σ_t weighted_tf(t) · ln(1 + N / df(t)),
/// terms with df = 0 contributing nothing.
double tf_idf(const IndexDocument& doc, const std::vector<std::string>& distinct_terms, std::size_t live_documents,
              const std::function<std::size_t(const std::string&)>& document_frequency);

} // namespace mercury
