#include <benchmark/benchmark.h>

#include "mercury/mock_provider.hpp"
#include "mercury/oai.hpp"

namespace {

using namespace mercury;

std::string list_records_page(std::size_t page_size) {
    mock::GeneratorOptions opts;
    opts.records = page_size;
    opts.page_size = page_size;
    mock::MockProvider provider(mock::generate_corpus(3, opts), [] { return Instant{}; });
    return provider.handle({{"verb", "ListRecords"}, {"metadataPrefix", "oai_dc"}}).body;
}

void BM_ParseEnvelope(benchmark::State& state) {
    const auto body = list_records_page(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(oai::parse_envelope(body));
    state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * body.size()));
}
BENCHMARK(BM_ParseEnvelope)->Arg(10)->Arg(50);

void BM_BuildRequest(benchmark::State& state) {
    oai::HarvestRequest r{"http://daac.example.org/oai", oai::Verb::ListRecords,
                          {{"metadataPrefix", "oai_dc"}, {"from", "2010-05-01T00:00:00Z"}, {"set", "veg:npp"}}};
    for (auto _ : state) benchmark::DoNotOptimize(oai::build_request(r));
}
BENCHMARK(BM_BuildRequest);

} // namespace
