#include <gtest/gtest.h>

#include <thread>

#include "generators.hpp"
#include "harness.hpp"
#include "mercury/error.hpp"
#include "mercury/harvester.hpp"

namespace mercury {
namespace {

using namespace std::chrono_literals;
using testing::HarvestRig;

Instant at(const char* text) { return parse_rfc3339(text); }

mock::MockCorpus corpus(std::size_t records, std::size_t page_size, std::size_t deleted = 0, std::uint64_t seed = 5) {
    mock::GeneratorOptions opts;
    opts.records = records;
    opts.page_size = page_size;
    opts.deleted = deleted;
    return mock::generate_corpus(seed, opts);
}

Instant max_datestamp(const mock::MockCorpus& c) {
    Instant m{};
    for (const auto& r : c.records) m = std::max(m, r.datestamp);
    return m;
}

std::size_t stamped_at(const mock::MockCorpus& c, Instant t) {
    std::size_t n = 0;
    for (const auto& r : c.records) n += r.datestamp == t ? 1 : 0;
    return n;
}

std::string live_json(const Store& store) {
    std::string out;
    for (const auto& [id, r] : store.live()) out += to_json(r).dump() + "\n";
    return out;
}

oai::RawRecord raw_live(const std::string& id, const char* stamp, const std::string& title = "A title") {
    return oai::RawRecord{id, at(stamp), {}, false,
                          "<oai_dc:dc xmlns:oai_dc=\"http://www.openarchives.org/OAI/2.0/oai_dc/\" "
                          "xmlns:dc=\"http://purl.org/dc/elements/1.1/\"><dc:title>" +
                              title + "</dc:title></oai_dc:dc>"};
}

TEST(Backoff, Schedule) {
    EXPECT_EQ(backoff_schedule(1), 1s);
    EXPECT_EQ(backoff_schedule(2), 2s);
    EXPECT_EQ(backoff_schedule(3), 4s);
    EXPECT_EQ(backoff_schedule(7), 60s);
    EXPECT_EQ(backoff_schedule(8), 60s);
    EXPECT_EQ(backoff_schedule(100), 60s);
    EXPECT_THROW(backoff_schedule(0), UsageError);
}

TEST(Backoff, RetryAfterOverridesAndIsCapped) {
    HttpResponse r{503, "", std::string("7")};
    EXPECT_EQ(retry_delay(1, &r), 7s);
    r.retry_after = "4000";
    EXPECT_EQ(retry_delay(1, &r), 300s);
    r.retry_after = "soon";
    EXPECT_EQ(retry_delay(3, &r), 4s);
    HttpResponse other{500, "", std::string("7")};
    EXPECT_EQ(retry_delay(2, &other), 2s);
    EXPECT_EQ(retry_delay(2, nullptr), 2s);
}

TEST(ApplyPage, Classification) {
    testing::TempDir dir;
    Catalog catalog(dir.path());
    ProviderConfig p{"daac", "http://x/oai", "oai_dc", std::nullopt, 30};
    auto first = apply_page(catalog, {raw_live("a", "2010-01-01T00:00:00Z")}, p);
    EXPECT_EQ(first.new_records, 1u);
    auto state = live_json(catalog.store());
    auto seq = catalog.store().last_seq();

    auto again = apply_page(catalog, {raw_live("a", "2010-01-01T00:00:00Z")}, p);
    EXPECT_EQ(again.unchanged, 1u);
    EXPECT_EQ(again.new_records + again.updated + again.deleted, 0u);
    EXPECT_EQ(live_json(catalog.store()), state);
    EXPECT_EQ(catalog.store().last_seq(), seq);

    auto older = apply_page(catalog, {raw_live("a", "2009-01-01T00:00:00Z", "Old")}, p);
    EXPECT_EQ(older.unchanged, 1u);

    auto newer = apply_page(catalog, {raw_live("a", "2010-02-01T00:00:00Z", "New")}, p);
    EXPECT_EQ(newer.updated, 1u);
    EXPECT_EQ(catalog.store().get(make_record_id("daac", "a"))->title, "New");

    auto unknown_deleted = apply_page(catalog, {oai::RawRecord{"zzz", at("2010-01-01T00:00:00Z"), {}, true, {}}}, p);
    EXPECT_EQ(unknown_deleted.deleted, 1u);
    EXPECT_EQ(catalog.store().last_seq(), seq + 2);
}

TEST(ApplyPage, InvalidRecordsAreWarningsAndSkipped) {
    testing::TempDir dir;
    Catalog catalog(dir.path());
    ProviderConfig p{"daac", "http://x/oai", "oai_dc", std::nullopt, 30};
    auto no_title = raw_live("b", "2010-01-01T00:00:00Z", "");
    auto broken = raw_live("c", "2010-01-01T00:00:00Z");
    broken.metadata_xml = "<oai_dc:dc";
    auto stats = apply_page(catalog, {no_title, broken, raw_live("d", "2010-01-01T00:00:00Z")}, p);
    EXPECT_EQ(stats.new_records, 1u);
    EXPECT_GE(stats.warnings, 2u);
    EXPECT_EQ(catalog.store().live_count(), 1u);
    EXPECT_EQ(catalog.index().size(), 1u);
}

TEST(ApplyPage, DeleteThenReaddWithinOnePage) {
    testing::TempDir dir;
    Catalog catalog(dir.path());
    ProviderConfig p{"daac", "http://x/oai", "oai_dc", std::nullopt, 30};
    apply_page(catalog, {raw_live("a", "2010-01-01T00:00:00Z")}, p);
    auto stats = apply_page(catalog,
                            {oai::RawRecord{"a", at("2010-01-02T00:00:00Z"), {}, true, {}},
                             raw_live("a", "2010-01-03T00:00:00Z", "Back")},
                            p);
    EXPECT_EQ(stats.deleted, 1u);
    EXPECT_EQ(stats.new_records, 1u);
    EXPECT_TRUE(catalog.index().contains(make_record_id("daac", "a")));
}

TEST(Harvest, FullThenIncrementalOnTwentyFiveRecords) {
    auto c = corpus(25, 10);
    HarvestRig rig(c);
    auto full = rig.run(HarvestMode::full);
    EXPECT_EQ(full.error, std::nullopt);
    EXPECT_EQ(full.pages, 3u);
    EXPECT_EQ(full.new_records, 25u);
    EXPECT_EQ(full.updated + full.deleted + full.unchanged, 0u);
    EXPECT_EQ(testing::index_live_ids(rig.catalog->index()), testing::expected_live_ids(c, "mock"));
    auto state = rig.catalog->store().state("mock");
    EXPECT_EQ(state.last_run_outcome, HarvestOutcome::success);
    EXPECT_EQ(state.last_success_datestamp, max_datestamp(c));

    auto inc = rig.run(HarvestMode::incremental);
    EXPECT_EQ(inc.error, std::nullopt);
    EXPECT_EQ(inc.new_records + inc.updated + inc.deleted, 0u);
    EXPECT_EQ(inc.unchanged, stamped_at(c, max_datestamp(c)));
    // Identify, then one ListRecords page with an inclusive from.
    auto urls = rig.transport->urls();
    ASSERT_GE(urls.size(), 2u);
    EXPECT_NE(urls[urls.size() - 2].find("verb=Identify"), std::string::npos);
    EXPECT_NE(urls.back().find("from=" + oai::percent_encode(format_rfc3339(max_datestamp(c)))), std::string::npos);
}

TEST(Harvest, DayGranularityCursor) {
    mock::GeneratorOptions opts;
    opts.records = 12;
    opts.granularity = Granularity::day;
    auto c = mock::generate_corpus(9, opts);
    HarvestRig rig(c);
    ASSERT_EQ(rig.run(HarvestMode::full).error, std::nullopt);
    auto inc = rig.run(HarvestMode::incremental);
    EXPECT_EQ(inc.error, std::nullopt);
    EXPECT_EQ(inc.unchanged, stamped_at(c, max_datestamp(c)));
    EXPECT_NE(rig.transport->urls().back().find("from=" + format_day(max_datestamp(c))), std::string::npos);
}

TEST(Harvest, IncrementalWithoutCursorPromotesToFull) {
    HarvestRig rig(corpus(5, 10));
    auto r = rig.run(HarvestMode::incremental);
    EXPECT_EQ(r.mode, HarvestMode::full);
    EXPECT_EQ(r.new_records, 5u);
    EXPECT_GE(r.warnings, 1u);
    EXPECT_FALSE(r.messages.empty());
}

TEST(Harvest, FullTwiceIsIdempotent) {
    HarvestRig rig(corpus(30, 7, 4));
    rig.run(HarvestMode::full);
    auto state = live_json(rig.catalog->store());
    auto search = to_json(rig.catalog->index().search(Query{})).dump();
    auto second = rig.run(HarvestMode::full);
    EXPECT_EQ(second.new_records + second.updated, 0u);
    EXPECT_EQ(second.unchanged, 26u);
    EXPECT_EQ(second.deleted, 4u);
    EXPECT_EQ(live_json(rig.catalog->store()), state);
    EXPECT_EQ(to_json(rig.catalog->index().search(Query{})).dump(), search);
}

TEST(Harvest, ServiceUnavailableIsRetriedWithRetryAfter) {
    auto c = corpus(25, 10);
    c.fault_plan.fail_page_once_503 = 2;
    c.fault_plan.retry_after_seconds = 3;
    HarvestRig rig(c);
    auto r = rig.run(HarvestMode::full);
    EXPECT_EQ(r.error, std::nullopt);
    EXPECT_EQ(r.pages, 3u);
    EXPECT_EQ(r.new_records, 25u);
    EXPECT_EQ(*rig.delays, (std::vector<std::chrono::seconds>{3s}));
}

TEST(Harvest, TransientFailuresBackOffThenGiveUp) {
    HarvestRig rig(corpus(5, 10));
    rig.transport->intercept = [](const std::string&) -> std::optional<HttpResponse> {
        return HttpResponse{500, "oops", std::nullopt};
    };
    auto r = rig.run(HarvestMode::full);
    ASSERT_TRUE(r.error);
    EXPECT_EQ(*rig.delays, (std::vector<std::chrono::seconds>{1s, 2s, 4s, 8s}));
    EXPECT_EQ(rig.transport->urls().size(), static_cast<std::size_t>(kRetryBudget));
    auto state = rig.catalog->store().state("mock");
    EXPECT_EQ(state.last_run_outcome, HarvestOutcome::failed);
    EXPECT_EQ(state.last_success_datestamp, std::nullopt);
}

TEST(Harvest, TransportErrorsAreRetried) {
    HarvestRig rig(corpus(5, 10));
    int calls = 0;
    rig.transport->intercept = [&](const std::string&) -> std::optional<HttpResponse> {
        if (++calls <= 2) throw TransportError("connection refused");
        return std::nullopt;
    };
    auto r = rig.run(HarvestMode::full);
    EXPECT_EQ(r.error, std::nullopt);
    EXPECT_EQ(r.new_records, 5u);
    EXPECT_EQ(*rig.delays, (std::vector<std::chrono::seconds>{1s, 2s}));
}

TEST(Harvest, ClientErrorIsNotRetried) {
    HarvestRig rig(corpus(5, 10));
    rig.transport->intercept = [](const std::string&) -> std::optional<HttpResponse> {
        return HttpResponse{404, "", std::nullopt};
    };
    auto r = rig.run(HarvestMode::full);
    EXPECT_TRUE(r.error);
    EXPECT_TRUE(rig.delays->empty());
}

TEST(Harvest, FailureKeepsAppliedPagesAndCursor) {
    auto c = corpus(25, 10);
    HarvestRig rig(c);
    rig.run(HarvestMode::full);
    const auto cursor = rig.catalog->store().state("mock").last_success_datestamp;

    auto bigger = c;
    testing::Rng rng(3);
    testing::mutate_corpus(bigger, rng, {2, 0, 25});
    bigger.page_size = 10;
    rig.provider->replace_corpus(bigger);
    int lists = 0;
    rig.transport->intercept = [&](const std::string& url) -> std::optional<HttpResponse> {
        if (url.find("verb=ListRecords") == std::string::npos) return std::nullopt;
        if (++lists >= 2) return HttpResponse{502, "", std::nullopt};
        return std::nullopt;
    };
    auto r = rig.run(HarvestMode::incremental);
    EXPECT_TRUE(r.error);
    EXPECT_EQ(r.pages, 1u);
    EXPECT_GT(r.processed(), 0u);
    auto state = rig.catalog->store().state("mock");
    EXPECT_EQ(state.last_run_outcome, HarvestOutcome::failed);
    EXPECT_EQ(state.last_success_datestamp, cursor);
    EXPECT_GT(rig.catalog->store().live_count(), 25u);
}

TEST(Harvest, ExpiredTokenRestartsListingOnce) {
    auto c = corpus(25, 10);
    c.fault_plan.expire_token_after_pages = 1;
    HarvestRig rig(c);
    auto r = rig.run(HarvestMode::full);
    EXPECT_EQ(r.error, std::nullopt);
    EXPECT_EQ(r.new_records, 25u);
    EXPECT_EQ(r.unchanged, 10u);
    EXPECT_EQ(r.pages, 4u);
    EXPECT_EQ(testing::index_live_ids(rig.catalog->index()), testing::expected_live_ids(c, "mock"));
}

TEST(Harvest, RepeatedBadTokenFails) {
    HarvestRig rig(corpus(25, 10));
    rig.transport->intercept = [](const std::string& url) -> std::optional<HttpResponse> {
        if (url.find("resumptionToken") == std::string::npos) return std::nullopt;
        return HttpResponse{200,
                            "<OAI-PMH xmlns='http://www.openarchives.org/OAI/2.0/'><responseDate>2020-01-01T00:00:00Z"
                            "</responseDate><request>x</request><error code='badResumptionToken'/></OAI-PMH>",
                            std::nullopt};
    };
    auto r = rig.run(HarvestMode::full);
    ASSERT_TRUE(r.error);
    EXPECT_NE(r.error->find("badResumptionToken"), std::string::npos);
}

TEST(Harvest, NoRecordsMatchIsSuccess) {
    HarvestRig rig(corpus(5, 10));
    rig.transport->intercept = [](const std::string& url) -> std::optional<HttpResponse> {
        if (url.find("verb=ListRecords") == std::string::npos) return std::nullopt;
        return HttpResponse{200,
                            "<OAI-PMH xmlns='http://www.openarchives.org/OAI/2.0/'><responseDate>2020-01-01T00:00:00Z"
                            "</responseDate><request>x</request><error code='noRecordsMatch'/></OAI-PMH>",
                            std::nullopt};
    };
    auto r = rig.run(HarvestMode::full);
    EXPECT_EQ(r.error, std::nullopt);
    EXPECT_EQ(r.processed(), 0u);
    EXPECT_EQ(r.pages, 0u);
    auto state = rig.catalog->store().state("mock");
    EXPECT_EQ(state.last_run_outcome, HarvestOutcome::success);
    EXPECT_EQ(state.last_success_datestamp, std::nullopt);
}

TEST(Harvest, GarbageResponseFails) {
    HarvestRig rig(corpus(5, 10));
    rig.transport->intercept = [](const std::string&) -> std::optional<HttpResponse> {
        return HttpResponse{200, "<html>maintenance</html>", std::nullopt};
    };
    auto r = rig.run(HarvestMode::full);
    EXPECT_TRUE(r.error);
    EXPECT_TRUE(rig.delays->empty());
}

TEST(Harvest, SetArgumentIsSent) {
    HarvestRig rig(corpus(5, 10));
    rig.config.set = "ecology";
    rig.run(HarvestMode::full);
    EXPECT_NE(rig.transport->urls().front().find("&set=ecology"), std::string::npos);
}

TEST(Harvest, OneRunPerProvider) {
    HarvestRig rig(corpus(5, 10));
    auto guard = rig.harvester->begin("mock");
    EXPECT_TRUE(rig.harvester->busy("mock"));
    EXPECT_THROW(rig.harvester->begin("mock"), HarvestInProgress);
    EXPECT_THROW(rig.run(HarvestMode::full), HarvestInProgress);
    EXPECT_NO_THROW(rig.harvester->begin("other"));
    {
        auto moved = std::move(guard);
    }
    EXPECT_FALSE(rig.harvester->busy("mock"));
    EXPECT_EQ(rig.run(HarvestMode::full).new_records, 5u);
}

TEST(Harvest, StateSurvivesReopen) {
    auto c = corpus(25, 10, 3);
    HarvestRig rig(c);
    rig.run(HarvestMode::full);
    auto before = testing::index_live_ids(rig.catalog->index());
    rig.reopen();
    EXPECT_EQ(testing::index_live_ids(rig.catalog->index()), before);
    EXPECT_EQ(before, testing::expected_live_ids(c, "mock"));
    EXPECT_EQ(rig.run(HarvestMode::incremental).new_records, 0u);
}

// Incremental completeness: after random mutations an incremental harvest
// leaves the same live state as a from-scratch full harvest of the result.
TEST(HarvestProperty, IncrementalEqualsFull) {
    testing::Rng rng(testing::test_seed(101));
    for (int round = 0; round < 15; ++round) {
        auto c = corpus(testing::uniform(rng, 15, 60), testing::uniform(rng, 3, 20), testing::uniform(rng, 0, 3), rng());
        HarvestRig rig(c);
        ASSERT_EQ(rig.run(HarvestMode::full).error, std::nullopt);
        auto previous_cursor = rig.catalog->store().state("mock").last_success_datestamp;
        for (int step = 0; step < 2; ++step) {
            testing::MutationPlan plan{testing::uniform(rng, 0, 5), testing::uniform(rng, 0, 3),
                                       testing::uniform(rng, 0, 5)};
            auto m = testing::mutate_corpus(c, rng, plan);
            rig.provider->replace_corpus(c);
            auto r = rig.run(HarvestMode::incremental);
            ASSERT_EQ(r.error, std::nullopt);
            EXPECT_EQ(r.new_records, plan.added);
            EXPECT_EQ(r.updated, plan.updated);
            EXPECT_EQ(r.deleted, plan.deleted + m.boundary_deleted);
            EXPECT_EQ(r.unchanged, m.boundary_unchanged);
            auto cursor = rig.catalog->store().state("mock").last_success_datestamp;
            EXPECT_GE(*cursor, *previous_cursor);
            previous_cursor = cursor;
        }
        HarvestRig fresh(c);
        ASSERT_EQ(fresh.run(HarvestMode::full).error, std::nullopt);
        EXPECT_EQ(live_json(rig.catalog->store()), live_json(fresh.catalog->store()));
        EXPECT_EQ(testing::index_live_ids(rig.catalog->index()), testing::expected_live_ids(c, "mock"));
    }
}

} // namespace
} // namespace mercury
