#include <benchmark/benchmark.h>

#include <cstdlib>
#include <filesystem>

#include "mercury/store.hpp"

namespace {

using namespace mercury;

MetadataRecord sample(std::size_t n) {
    MetadataRecord r;
    r.provider_key = "bench";
    r.local_identifier = "rec-" + std::to_string(n);
    r.record_id = make_record_id("bench", r.local_identifier);
    r.title = "Soil respiration at Harvard Forest";
    r.abstract = "Chamber measurements of soil CO2 efflux, hourly, 1995-2005.";
    r.keywords = {"soil", "respiration", "carbon"};
    r.spatial = SpatialExtent{-72.2, 42.5, -72.1, 42.6};
    return r;
}

void BM_EncodeLine(benchmark::State& state) {
    JournalEntry e{1, EntryKind::upsert, sample(1), {}};
    for (auto _ : state) benchmark::DoNotOptimize(encode_line(e));
}
BENCHMARK(BM_EncodeLine);

void BM_DecodeLine(benchmark::State& state) {
    auto line = encode_line(JournalEntry{1, EntryKind::upsert, sample(1), {}});
    line.pop_back();
    for (auto _ : state) benchmark::DoNotOptimize(decode_line(line));
}
BENCHMARK(BM_DecodeLine);

// Each batch is one write plus fsync.
void BM_AppendBatch(benchmark::State& state) {
    char tmpl[] = "/tmp/mercury-bench-XXXXXX";
    std::filesystem::path dir = ::mkdtemp(tmpl);
    const auto batch_size = static_cast<std::size_t>(state.range(0));
    {
        auto journal = Journal::open(dir / "journal.ndjson");
        std::uint64_t seq = 0;
        for (auto _ : state) {
            std::vector<JournalEntry> batch;
            for (std::size_t i = 0; i < batch_size; ++i) batch.push_back({++seq, EntryKind::upsert, sample(seq), {}});
            journal.append_batch(batch);
        }
        state.SetItemsProcessed(static_cast<std::int64_t>(seq));
    }
    std::filesystem::remove_all(dir);
}
BENCHMARK(BM_AppendBatch)->Arg(1)->Arg(50);

} // namespace
