#include <benchmark/benchmark.h>

#include "mercury/mock_provider.hpp"
#include "mercury/dublin_core.hpp"
#include "mercury/index.hpp"

namespace {

using namespace mercury;

const std::vector<MetadataRecord>& corpus(std::size_t n) {
    static std::map<std::size_t, std::vector<MetadataRecord>> cache;
    auto& out = cache[n];
    if (out.empty()) {
        mock::GeneratorOptions opts;
        opts.records = n;
        for (const auto& m : mock::generate_corpus(7, opts).records) {
            oai::RawRecord raw{m.identifier, m.datestamp, m.sets, false, m.metadata_xml};
            out.push_back(dc::finalize(dc::parse_record(raw), "bench"));
        }
    }
    return out;
}

void BM_Tokenize(benchmark::State& state) {
    const std::string text =
        "Net Primary Productivity (NPP) estimates for tallgrass prairie plots, Konza Prairie LTER, 1984-2001. "
        "Aboveground biomass was clipped, oven dried at 60 \xC2\xB0"
        "C and weighed.";
    for (auto _ : state) benchmark::DoNotOptimize(tokenize(text));
    state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * text.size()));
}
BENCHMARK(BM_Tokenize);

void BM_IndexBuild(benchmark::State& state) {
    const auto& records = corpus(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        Index index;
        for (const auto& r : records) index.upsert_document(r);
        benchmark::DoNotOptimize(index.size());
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * records.size()));
}
BENCHMARK(BM_IndexBuild)->Arg(100)->Arg(1000);

void BM_Search(benchmark::State& state) {
    const auto& records = corpus(static_cast<std::size_t>(state.range(0)));
    Index index;
    for (const auto& r : records) index.upsert_document(r);
    Query q;
    q.terms_text = "soil carbon flux";
    q.bbox = SpatialExtent{-130, 20, -60, 55};
    for (auto _ : state) benchmark::DoNotOptimize(index.search(q));
}
BENCHMARK(BM_Search)->Arg(100)->Arg(1000);

void BM_Browse(benchmark::State& state) {
    const auto& records = corpus(1000);
    Index index;
    for (const auto& r : records) index.upsert_document(r);
    for (auto _ : state) benchmark::DoNotOptimize(index.search(Query{}));
}
BENCHMARK(BM_Browse);

} // namespace
