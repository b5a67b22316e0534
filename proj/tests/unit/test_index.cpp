#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "generators.hpp"
#include "mercury/error.hpp"
#include "mercury/index.hpp"
#include "oracles.hpp"

namespace mercury {
namespace {

using testing::Rng;

Instant at(const char* text) { return parse_rfc3339(text); }

MetadataRecord record(const std::string& local, const std::string& title, const char* stamp = "2020-01-01T00:00:00Z") {
    MetadataRecord r;
    r.provider_key = "p";
    r.local_identifier = local;
    r.record_id = make_record_id("p", local);
    r.title = title;
    r.datestamp = at(stamp);
    return r;
}

std::vector<std::string> ids(const SearchResult& r) {
    std::vector<std::string> out;
    for (const auto& h : r.hits) out.push_back(h.record_id.str());
    return out;
}

Query terms(const std::string& text, std::size_t size = 10) {
    Query q;
    q.terms_text = text;
    q.size = size;
    return q;
}

TEST(Tokenize, Examples) {
    EXPECT_EQ(tokenize("Net Primary Productivity (NPP), 2001"),
              (std::vector<std::string>{"net", "primary", "productivity", "npp", "2001"}));
    EXPECT_TRUE(tokenize("").empty());
    EXPECT_EQ(tokenize("CO2-flux"), (std::vector<std::string>{"co2", "flux"}));
    EXPECT_EQ(tokenize("  --  "), std::vector<std::string>{});
}

TEST(Tokenize, UnicodeLettersAndCaseFolding) {
    EXPECT_EQ(tokenize("\xC3\x89t\xC3\xA9 Temp\xC2\xB0"
                       "C"),
              (std::vector<std::string>{"\xC3\xA9t\xC3\xA9", "temp", "c"}));
    EXPECT_EQ(tokenize("\xCE\x94\xCE\xB8 dt"), (std::vector<std::string>{"\xCE\xB4\xCE\xB8", "dt"}));
    EXPECT_EQ(fold_case("ABC\xC3\x84"), "abc\xC3\xA4");
}

TEST(Tokenize, AgreesWithAsciiOracle) {
    Rng rng(testing::test_seed(41));
    for (int i = 0; i < 500; ++i) {
        std::string s;
        for (std::size_t n = testing::uniform(rng, 0, 40); n > 0; --n) {
            s.push_back(static_cast<char>(testing::uniform(rng, 0x20, 0x7E)));
        }
        EXPECT_EQ(tokenize(s), testing::ascii_tokenize(s)) << s;
    }
}

TEST(DistinctTerms, FirstAppearanceOrder) {
    EXPECT_EQ(distinct_terms("b a B c a"), (std::vector<std::string>{"b", "a", "c"}));
}

TEST(BboxIntersects, Examples) {
    SpatialExtent box{-10, -10, 10, 10};
    EXPECT_TRUE(bbox_intersects(box, box));
    EXPECT_TRUE(bbox_intersects(box, SpatialExtent{10, 0, 20, 5}));
    EXPECT_FALSE(bbox_intersects(box, SpatialExtent{10.5, 0, 20, 5}));
    EXPECT_TRUE(bbox_intersects(SpatialExtent{170, -10, -170, 10}, SpatialExtent{175, -5, 180, 5}));
    EXPECT_TRUE(bbox_intersects(SpatialExtent{170, -10, -170, 10}, SpatialExtent{-175, -5, -172, 5}));
    EXPECT_FALSE(bbox_intersects(SpatialExtent{170, -10, -170, 10}, SpatialExtent{-160, -5, 160, 5}));
    EXPECT_TRUE(bbox_intersects(SpatialExtent{170, -10, -170, 10}, SpatialExtent{160, -5, -160, 5}));
    // Planar: +180 and -180 are distinct meridians.
    EXPECT_FALSE(bbox_intersects(SpatialExtent{179, 0, 180, 1}, SpatialExtent{-180, 0, -179, 1}));
}

TEST(BboxIntersects, CrossingExampleAgreesWithSampling) {
    SpatialExtent a{170, -10, -170, 10}, b{175, -5, 180, 5};
    EXPECT_EQ(bbox_intersects(a, b), testing::boxes_meet_by_sampling(a, b));
}

TEST(BboxIntersects, PropertyAgreesWithBothOracles) {
    Rng rng(testing::test_seed(43));
    for (int i = 0; i < 2000; ++i) {
        auto a = testing::random_box(rng), b = testing::random_box(rng);
        bool want = testing::boxes_meet_by_decomposition(a, b);
        ASSERT_EQ(testing::boxes_meet_by_sampling(a, b), want);
        ASSERT_EQ(bbox_intersects(a, b), want);
        ASSERT_EQ(bbox_intersects(b, a), want);
    }
}

TEST(TemporalOverlaps, Examples) {
    TemporalExtent y2000{at("2000-01-01T00:00:00Z"), at("2001-01-01T00:00:00Z")};
    TemporalExtent y2001{at("2001-01-01T00:00:00Z"), at("2002-01-01T00:00:00Z")};
    TemporalExtent y2002{at("2002-01-01T00:00:01Z"), at("2003-01-01T00:00:00Z")};
    EXPECT_TRUE(temporal_overlaps(y2000, y2001));
    EXPECT_FALSE(temporal_overlaps(y2000, y2002));
}

TEST(TemporalOverlaps, PropertyAgreesWithInequalities) {
    Rng rng(testing::test_seed(47));
    for (int i = 0; i < 2000; ++i) {
        auto a = testing::random_interval(rng), b = testing::random_interval(rng);
        ASSERT_EQ(temporal_overlaps(a, b), testing::intervals_meet(a, b));
    }
}

TEST(Score, SingleTitleOccurrenceInThreeDocs) {
    Index index;
    index.upsert_document(record("a", "tundra"));
    index.upsert_document(record("b", "forest"));
    index.upsert_document(record("c", "desert"));
    auto result = index.search(terms("tundra"));
    ASSERT_EQ(result.hits.size(), 1u);
    EXPECT_NEAR(result.hits[0].score, 3 * std::log(4.0), 1e-12);
    EXPECT_NEAR(result.hits[0].score, 4.158883, 1e-6);
    EXPECT_EQ(index.score(make_record_id("p", "a"), {"tundra"}), result.hits[0].score);
}

TEST(Score, AbsentTermContributesNothing) {
    Index index;
    index.upsert_document(record("a", "tundra"));
    EXPECT_EQ(index.score(make_record_id("p", "a"), {"tundra", "zzz"}), index.score(make_record_id("p", "a"), {"tundra"}));
    EXPECT_EQ(index.search(terms("zzz")).total, 0u);
}

TEST(Score, FieldWeights) {
    auto r = record("a", "soil soil");
    r.keywords = {"soil"};
    r.abstract = "soil";
    r.attributes = {Attribute{"soil moisture", "%", std::nullopt, std::nullopt}};
    r.lineage = "soil";
    EXPECT_EQ(make_document(r).weighted_tf("soil"), 3u * 2 + 2 + 1 + 1 + 1);
}

TEST(Upsert, SearchFindsTitleTerm) {
    Index index;
    EXPECT_TRUE(index.upsert_document(record("a", "Snow depth")));
    EXPECT_EQ(ids(index.search(terms("snow"))), (std::vector<std::string>{"p:a"}));
}

TEST(Upsert, IdempotentAndFreshnessRule) {
    Index index;
    auto r = record("a", "snow", "2020-01-02T00:00:00Z");
    index.upsert_document(r);
    auto before = to_json(index.search(terms("snow"))).dump();
    index.upsert_document(r);
    EXPECT_EQ(index.size(), 1u);
    EXPECT_EQ(to_json(index.search(terms("snow"))).dump(), before);

    auto older = record("a", "rain", "2020-01-01T00:00:00Z");
    EXPECT_FALSE(index.upsert_document(older));
    EXPECT_EQ(index.search(terms("rain")).total, 0u);
    EXPECT_EQ(index.search(terms("snow")).total, 1u);

    auto newer = record("a", "rain", "2020-01-03T00:00:00Z");
    EXPECT_TRUE(index.upsert_document(newer));
    EXPECT_EQ(index.search(terms("snow")).total, 0u);
    EXPECT_EQ(index.search(terms("rain")).total, 1u);
    EXPECT_EQ(index.datestamp_of(newer.record_id), newer.datestamp);
}

TEST(Upsert, DeletedRecordIsUsageError) {
    Index index;
    auto r = record("a", "snow");
    r.deleted = true;
    EXPECT_THROW(index.upsert_document(r), UsageError);
}

TEST(Delete, Examples) {
    Index index;
    index.upsert_document(record("a", "snow", "2020-01-01T00:00:00Z"));
    EXPECT_TRUE(index.delete_document(make_record_id("p", "a")));
    EXPECT_EQ(index.search(terms("snow")).total, 0u);
    EXPECT_EQ(index.search(Query{}).total, 0u);
    EXPECT_FALSE(index.delete_document(make_record_id("p", "a")));
    EXPECT_EQ(index.size(), 0u);
    index.upsert_document(record("a", "snow", "2020-01-02T00:00:00Z"));
    EXPECT_TRUE(index.contains(make_record_id("p", "a")));
}

TEST(Search, BrowseOrdersByDatestampThenId) {
    Index index;
    index.upsert_document(record("c", "x", "2020-01-01T00:00:00Z"));
    index.upsert_document(record("a", "x", "2020-01-01T00:00:00Z"));
    index.upsert_document(record("e", "x", "2020-01-03T00:00:00Z"));
    index.upsert_document(record("b", "x", "2020-01-02T00:00:00Z"));
    index.upsert_document(record("d", "x", "2020-01-03T00:00:00Z"));
    auto result = index.search(Query{});
    EXPECT_EQ(result.total, 5u);
    EXPECT_EQ(ids(result), (std::vector<std::string>{"p:d", "p:e", "p:b", "p:a", "p:c"}));
    for (const auto& h : result.hits) EXPECT_EQ(h.score, 0.0);
}

TEST(Search, BboxOnlyExcludesExtentless) {
    Index index;
    auto a = record("a", "x"), b = record("b", "x"), c = record("c", "x"), d = record("d", "x");
    a.spatial = SpatialExtent{0, 0, 10, 10};
    b.spatial = SpatialExtent{170, -10, -170, 10};
    c.spatial = SpatialExtent{20, 20, 30, 30};
    for (auto* r : {&a, &b, &c, &d}) index.upsert_document(*r);
    Query q;
    q.bbox = SpatialExtent{5, -5, -175, 5};  // crossing, meets a and b
    std::vector<MetadataRecord> live{a, b, c, d};
    EXPECT_EQ(index.search(q).total, 2u);
    EXPECT_EQ(testing::oracle_search(live, q).total, 2u);
}

TEST(Search, TermsIntervalAndPageTwoMatchOracleSlice) {
    Rng rng(testing::test_seed(53));
    Index index;
    std::vector<MetadataRecord> live;
    for (std::size_t i = 0; i < 10; ++i) {
        auto r = testing::random_record(rng, "p", i);
        r.temporal = TemporalExtent{at("2000-01-01T00:00:00Z"), at("2005-01-01T00:00:00Z")};
        if (i % 4 == 0) r.temporal = TemporalExtent{at("1990-01-01T00:00:00Z"), at("1991-01-01T00:00:00Z")};
        r.title += " alpha beta";
        live.push_back(r);
        index.upsert_document(r);
    }
    Query q = terms("alpha beta", 3);
    q.interval = TemporalExtent{at("2001-01-01T00:00:00Z"), at("2001-02-01T00:00:00Z")};
    q.page = 2;
    auto want = testing::oracle_search(live, q);
    ASSERT_GE(want.ranked.size(), 6u);
    auto got = index.search(q);
    EXPECT_EQ(testing::search_disagreement(got, want, q), std::nullopt);
    ASSERT_EQ(got.hits.size(), 3u);
    EXPECT_EQ(got.hits[0].record_id.str(), want.ranked[3].record_id);
    EXPECT_EQ(got.hits[2].record_id.str(), want.ranked[5].record_id);
}

TEST(Search, PageAndSizeRange) {
    Index index;
    Query q;
    q.page = 0;
    EXPECT_THROW(index.search(q), ValidationError);
    q.page = 1;
    q.size = 0;
    EXPECT_THROW(index.search(q), ValidationError);
    q.size = 101;
    EXPECT_THROW(index.search(q), ValidationError);
    q.size = 100;
    EXPECT_NO_THROW(index.search(q));
}

TEST(Search, KeywordFilterIsCaseInsensitiveAndFacetsUseRawText) {
    Index index;
    auto a = record("a", "x"), b = record("b", "x");
    a.keywords = {"Soil", "carbon"};
    b.keywords = {"soil"};
    index.upsert_document(a);
    index.upsert_document(b);
    Query q;
    q.keyword_filter = "SOIL";
    auto r = index.search(q);
    EXPECT_EQ(r.total, 2u);
    ASSERT_EQ(r.keyword_facets.size(), 3u);
    EXPECT_EQ(r.keyword_facets[0].keyword, "Soil");
    EXPECT_EQ(r.keyword_facets[1].keyword, "carbon");
    EXPECT_EQ(r.keyword_facets[2].keyword, "soil");
}

TEST(Search, KeywordFacetsCappedAtTwenty) {
    Index index;
    auto r = record("a", "x");
    for (int i = 0; i < 30; ++i) r.keywords.push_back("k" + std::to_string(100 + i));
    index.upsert_document(r);
    auto result = index.search(Query{});
    ASSERT_EQ(result.keyword_facets.size(), kKeywordFacetLimit);
    EXPECT_EQ(result.keyword_facets.front().keyword, "k100");
    EXPECT_EQ(result.keyword_facets.back().keyword, "k119");
}

struct Corpus {
    std::vector<MetadataRecord> live;
    std::vector<std::string> providers;
};

Corpus fill(Index& index, Rng& rng, std::size_t n) {
    Corpus c;
    c.providers = {"daac", "lter", "nbii"};
    for (std::size_t i = 0; i < n; ++i) {
        auto r = testing::random_record(rng, c.providers[testing::uniform(rng, 0, 2)], i);
        index.upsert_document(r);
        c.live.push_back(r);
    }
    return c;
}

TEST(SearchProperty, OracleEquivalence) {
    Rng rng(testing::test_seed(59));
    for (int corpus = 0; corpus < 20; ++corpus) {
        Index index;
        auto c = fill(index, rng, testing::uniform(rng, 1, 100));
        for (int i = 0; i < 20; ++i) {
            auto q = testing::random_query(rng, c.providers);
            auto d = testing::search_disagreement(index.search(q), testing::oracle_search(c.live, q), q);
            ASSERT_EQ(d, std::nullopt) << "corpus " << corpus << " query '" << q.terms_text << "'";
        }
    }
}

TEST(SearchProperty, PaginationCoherence) {
    Rng rng(testing::test_seed(61));
    for (int round = 0; round < 30; ++round) {
        Index index;
        auto c = fill(index, rng, testing::uniform(rng, 0, 60));
        auto q = testing::random_query(rng, c.providers);
        q.page = 1;
        q.size = 100;
        auto all = ids(index.search(q));
        std::vector<std::string> joined;
        q.size = testing::uniform(rng, 1, 7);
        for (q.page = 1;; ++q.page) {
            auto page = index.search(q);
            if (page.hits.empty()) break;
            EXPECT_LE(page.hits.size(), q.size);
            for (auto& id : ids(page)) joined.push_back(id);
        }
        EXPECT_EQ(joined, all);
        EXPECT_EQ(std::set<std::string>(joined.begin(), joined.end()).size(), joined.size());
    }
}

TEST(SearchProperty, DeletionCompletenessAndCount) {
    Rng rng(testing::test_seed(67));
    Index index;
    auto c = fill(index, rng, 80);
    std::size_t expected = c.live.size();
    std::set<std::string> removed;
    for (std::size_t i = 0; i < c.live.size(); i += 3) {
        EXPECT_TRUE(index.delete_document(c.live[i].record_id));
        EXPECT_FALSE(index.delete_document(c.live[i].record_id));
        removed.insert(c.live[i].record_id.str());
        --expected;
        ASSERT_EQ(index.size(), expected);
    }
    for (int i = 0; i < 200; ++i) {
        auto q = testing::random_query(rng, c.providers);
        q.page = 1;
        q.size = 100;
        for (const auto& h : index.search(q).hits) ASSERT_FALSE(removed.count(h.record_id.str())) << h.record_id.str();
    }
    EXPECT_EQ(index.live_ids().size(), expected);
}

TEST(SearchProperty, Determinism) {
    Rng a(testing::test_seed(71)), b(testing::test_seed(71));
    Index ia, ib;
    auto ca = fill(ia, a, 50);
    fill(ib, b, 50);
    for (int i = 0; i < 50; ++i) {
        auto q = testing::random_query(a, ca.providers);
        EXPECT_EQ(to_json(ia.search(q)).dump(), to_json(ib.search(q)).dump());
    }
}

} // namespace
} // namespace mercury
