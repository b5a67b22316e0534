// Runs every primary acceptance criterion at its stated tolerance and time
// limit. One line per criterion; exit status 1 if any fails.
//
//   mercury_acceptance                 run all criteria
//   mercury_acceptance --write-golden  regenerate tests/fixtures/golden/search/
//                                      (each body is checked against the
//                                      full-scan oracle before it is written)

#include <chrono>
#include <condition_variable>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <mutex>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cli.hpp"
#include "generators.hpp"
#include "harness.hpp"
#include "oracles.hpp"
#include "mercury/oai.hpp"
#include "mercury/query.hpp"
#include "mercury/service.hpp"
#include "mercury/store.hpp"

namespace fs = std::filesystem;
using namespace mercury;
using namespace mercury::testing;
using nlohmann::json;

namespace {

// Thrown by require() to fail the current criterion with a reason.
struct Failed {
    std::string why;
};

void require(bool ok, const std::string& why) {
    if (!ok) throw Failed{why};
}

template <class A, class B>
void require_eq(const A& got, const B& want, const std::string& what) {
    if (!(got == want)) {
        std::ostringstream s;
        s << what << ": got " << got << ", want " << want;
        throw Failed{s.str()};
    }
}

std::set<std::string> store_live_ids(const Store& store) {
    std::set<std::string> out;
    for (const auto& [id, r] : store.live()) out.insert(id.str());
    return out;
}

// Index live set equals replay live set, checked after every scenario.
void require_index_agrees(const Catalog& catalog, const std::string& where) {
    require(index_live_ids(catalog.index()) == store_live_ids(catalog.store()), where + ": index and store disagree");
}

std::string live_json(const Store& store) {
    std::string out;
    for (const auto& [id, r] : store.live()) out += to_json(r).dump() + "\n";
    return out;
}

std::string header_value(const ApiResponse& r, const std::string& name) {
    for (const auto& [k, v] : r.headers) {
        if (k == name) return v;
    }
    return {};
}

Sleeper no_sleep() {
    return [](std::chrono::seconds) {};
}

// ---------------------------------------------------------------------------

std::string full_harvest() {
    mock::GeneratorOptions opts;
    opts.records = 120;
    opts.page_size = 50;
    opts.deleted = 5;
    auto corpus = mock::generate_corpus(120, opts);

    // Oracle: enumerate the corpus file directly.
    TempDir dir("mercury-accept");
    auto corpus_file = dir.path() / "corpus.json";
    write_file(corpus_file, mock::to_json(corpus).dump(2));
    auto from_file = mock::load_corpus(corpus_file);
    std::size_t live = 0, deleted = 0;
    for (const auto& r : from_file.records) (r.deleted ? deleted : live) += 1;
    require_eq(live, 115u, "corpus live records");
    require_eq(deleted, 5u, "corpus deleted records");

    auto transport =
        std::make_shared<InProcessTransport>(std::make_shared<mock::MockProvider>(from_file, fixed_instant));
    ServiceConfig config;
    config.store_dir = dir.path() / "store";
    Service service(config, transport, no_sleep());
    service.open();
    auto add = service.handle({"POST", "/api/providers",
                               json{{"provider_key", "mock"}, {"base_url", from_file.base_url}}.dump()});
    require_eq(add.status, 201, "add provider status");
    auto trig = service.handle({"POST", "/api/harvest/mock?mode=full", ""});
    require_eq(trig.status, 202, "trigger status");
    service.wait_for_runs();
    auto run = json::parse(service.handle({"GET", "/api/harvest/runs/run-1", ""}).body);
    require_eq(run["status"].get<std::string>(), std::string("finished"), "run status");
    const auto& report = run["report"];
    require_eq(report["pages"].get<int>(), 3, "pages");
    require_eq(report["new"].get<std::size_t>(), live, "new");
    require_eq(report["deleted"].get<std::size_t>(), deleted, "deleted");
    require_eq(report["updated"].get<int>(), 0, "updated");
    auto health = json::parse(service.handle({"GET", "/health", ""}).body);
    require_eq(health["live_records"].get<std::size_t>(), live, "/health live_records");
    require(index_live_ids(service.catalog().index()) == expected_live_ids(from_file, "mock"),
            "index live set differs from corpus enumeration");
    require_index_agrees(service.catalog(), "full harvest");
    return "pages=3 new=115 deleted=5 live_records=115";
}

std::string incremental_harvest() {
    Rng rng(test_seed(704));
    const MutationPlan plan{7, 3, 4};
    std::size_t boundary_refetches = 0;
    for (int trial = 0; trial < 100; ++trial) {
        mock::GeneratorOptions opts;
        opts.records = uniform(rng, 20, 80);
        opts.page_size = uniform(rng, 5, 30);
        opts.deleted = uniform(rng, 0, 4);
        opts.granularity = coin(rng, 0.2) ? Granularity::day : Granularity::seconds;
        auto corpus = mock::generate_corpus(rng(), opts);
        const std::string at = "trial " + std::to_string(trial);

        HarvestRig rig(corpus);
        auto first = rig.run(HarvestMode::full);
        require(!first.error, at + ": full harvest failed: " + first.error.value_or(""));

        auto m = mutate_corpus(corpus, rng, plan);
        rig.provider->replace_corpus(corpus);
        auto r = rig.run(HarvestMode::incremental);
        require(!r.error, at + ": incremental harvest failed: " + r.error.value_or(""));
        require_eq(r.new_records, plan.added, at + " new");
        require_eq(r.updated, plan.updated, at + " updated");
        // Tombstones at the cursor are re-fetched by the inclusive `from` and
        // journaled again; everything else re-fetched is unchanged.
        require_eq(r.deleted, plan.deleted + m.boundary_deleted, at + " deleted");
        require_eq(r.unchanged, m.boundary_unchanged, at + " unchanged");
        boundary_refetches += m.boundary_unchanged + m.boundary_deleted;

        HarvestRig fresh(corpus);
        auto scratch = fresh.run(HarvestMode::full);
        require(!scratch.error, at + ": scratch harvest failed");
        require(live_json(rig.catalog->store()) == live_json(fresh.catalog->store()),
                at + ": live set differs from a from-scratch full harvest");
        require(index_live_ids(rig.catalog->index()) == expected_live_ids(corpus, "mock"),
                at + ": index live set differs from corpus");
        require_index_agrees(*rig.catalog, at);
    }
    return "100 trials, report 4/7/3, " + std::to_string(boundary_refetches) + " boundary re-fetches";
}

std::string ranking_oracle() {
    Rng rng(test_seed(705));
    const std::vector<std::string> providers{"daac", "lter", "nbii"};
    std::size_t checked = 0;
    for (int corpus = 0; corpus < 50; ++corpus) {
        Index index;
        std::vector<MetadataRecord> live;
        for (std::size_t i = 0, n = uniform(rng, 1, 100); i < n; ++i) {
            auto r = random_record(rng, providers[uniform(rng, 0, 2)], i);
            index.upsert_document(r);
            live.push_back(r);
        }
        for (int i = 0; i < 20; ++i) {
            auto q = random_query(rng, providers);
            auto d = search_disagreement(index.search(q), oracle_search(live, q), q, 1e-9);
            require(!d, "corpus " + std::to_string(corpus) + " query '" + q.terms_text + "': " + d.value_or(""));
            ++checked;
        }
    }
    return std::to_string(checked) + " queries, tolerance 1e-9";
}

std::string spatiotemporal_oracle() {
    Rng rng(test_seed(706));
    std::size_t crossing = 0, touching = 0, agreeing = 0;
    for (int i = 0; i < 1000; ++i) {
        auto a = random_box(rng), b = random_box(rng);
        bool want = boxes_meet_by_decomposition(a, b);
        require(bbox_intersects(a, b) == want && bbox_intersects(b, a) == want, "box pair " + std::to_string(i));
        require(boxes_meet_by_sampling(a, b) == want, "oracles disagree on box pair " + std::to_string(i));
        crossing += (a.west > a.east) || (b.west > b.east);
        touching += a.east == b.west || a.west == b.east || a.north == b.south || a.south == b.north;
        ++agreeing;
    }
    require(crossing > 0, "no antimeridian-crossing pairs generated");
    require(touching > 0, "no edge-touching pairs generated");
    for (int i = 0; i < 1000; ++i) {
        auto a = random_interval(rng), b = random_interval(rng);
        require(temporal_overlaps(a, b) == intervals_meet(a, b), "interval pair " + std::to_string(i));
        ++agreeing;
    }
    return std::to_string(agreeing) + "/2000 agree (" + std::to_string(crossing) + " crossing, " +
           std::to_string(touching) + " touching)";
}

std::string protocol_conformance() {
    using namespace mercury::oai;
    auto cases = json::parse(read_file(fixture_path("oai/golden_urls.json")));
    std::set<std::string> verbs;
    for (const auto& c : cases) {
        HarvestRequest r{"http://daac.example.org/oai", *verb_from_name(c.at("verb").get<std::string>()), {}};
        for (const auto& a : c.at("arguments")) r.arguments.emplace_back(a.at(0), a.at(1));
        require_eq(build_request(r), c.at("url").get<std::string>(), "golden URL");
        verbs.insert(c.at("verb").get<std::string>());
    }
    require_eq(verbs.size(), 6u, "verbs covered by golden URLs");

    const std::vector<std::pair<std::string, std::size_t>> payloads{
        {"identify.xml", 0},         {"list_metadata_formats.xml", 1}, {"list_sets.xml", 2},
        {"list_records.xml", 3},     {"list_records_last_page.xml", 3}, {"list_identifiers.xml", 4},
        {"get_record.xml", 5},
    };
    std::set<std::size_t> variants;
    for (const auto& [file, index] : payloads) {
        auto e = parse_envelope(read_file(fixture_path("oai/" + file)));
        require_eq(e.payload.index(), index, file + " payload variant");
        variants.insert(index);
    }
    std::set<std::string> codes;
    for (const char* code : {"badArgument", "badResumptionToken", "badVerb", "cannotDisseminateFormat",
                             "idDoesNotExist", "noRecordsMatch", "noMetadataFormats", "noSetHierarchy"}) {
        auto e = parse_envelope(read_file(fixture_path(std::string("oai/error_") + code + ".xml")));
        require(e.is_error(), std::string(code) + " fixture is not an error");
        require_eq(std::string(error_code_name(std::get<OaiError>(e.payload).code)), std::string(code), "error code");
        codes.insert(code);
    }
    variants.insert(6);
    require_eq(variants.size(), 7u, "payload variants covered");

    Rng rng(test_seed(707));
    const std::string seed_doc = read_file(fixture_path("oai/list_records.xml"));
    std::size_t rejected = 0;
    for (int i = 0; i < 10000; ++i) {
        std::string input;
        if (coin(rng)) {
            input = random_bytes(rng, 200);
        } else {
            input = seed_doc;
            for (std::size_t k = uniform(rng, 1, 8); k > 0 && !input.empty(); --k) {
                auto pos = uniform(rng, 0, input.size() - 1);
                switch (uniform(rng, 0, 2)) {
                    case 0: input[pos] = static_cast<char>(uniform(rng, 0, 255)); break;
                    case 1: input.erase(pos, uniform(rng, 1, 30)); break;
                    default: input.resize(pos); break;
                }
            }
        }
        try {
            parse_envelope(input);
        } catch (const XmlParseError&) {
            ++rejected;
        } catch (const StructureError&) {
            ++rejected;
        } catch (const ValidationError&) {
            ++rejected;
        } catch (const std::exception& e) {
            throw Failed{"fuzz input " + std::to_string(i) + " escaped as " + e.what()};
        }
    }
    return std::to_string(cases.size()) + " URLs, 7 variants, 8 codes, 10000 fuzz (" + std::to_string(rejected) +
           " rejected, 0 aborts)";
}

// Truncates `full` at every offset inside its last line, opens a catalog
// over it and compares against the replay of every earlier entry.
std::size_t truncation_sweep(const std::vector<JournalEntry>& entries, const std::string& label) {
    std::string full;
    for (const auto& e : entries) full += encode_line(e);
    const std::size_t last_start = full.size() - encode_line(entries.back()).size();
    const auto expected = replay(std::span(entries).first(entries.size() - 1));
    std::set<std::string> expected_ids;
    for (const auto& [id, r] : expected) expected_ids.insert(id.str());

    Index reference;
    for (const auto& [id, r] : expected) reference.upsert_document(r);
    Query everything;
    everything.size = kMaxPageSize;
    const std::string reference_body = search_body(reference, everything);

    TempDir dir("mercury-crash");
    std::size_t cuts = 0;
    for (std::size_t cut = last_start; cut < full.size(); ++cut, ++cuts) {
        auto store_dir = dir.path() / ("s" + std::to_string(cut));
        fs::create_directories(store_dir);
        write_file(store_dir / Store::kJournalFile, full.substr(0, cut));
        const std::string at = label + " cut " + std::to_string(cut);
        {
            Catalog catalog(store_dir);
            require_eq(catalog.store().last_seq(), entries.size() - 1, at + " last_seq");
            require(catalog.store().live() == expected, at + ": replayed live set differs");
            require(index_live_ids(catalog.index()) == expected_ids, at + ": rebuilt index differs");
            require(search_body(catalog.index(), everything) == reference_body, at + ": search over index differs");
            require_eq(fs::file_size(store_dir / Store::kJournalFile), last_start, at + " file size");
        }
        fs::remove_all(store_dir);
    }
    return cuts;
}

std::string crash_consistency() {
    std::size_t cuts = 0;
    {
        // A journal written by a real harvest.
        TempDir dir("mercury-crash-src");
        harvest_demo(dir.path() / "store");
        auto entries = read_journal(dir.path() / "store" / Store::kJournalFile);
        require_eq(entries.size(), 25u, "demo journal entries");
        cuts += truncation_sweep(entries, "demo");
    }
    Rng rng(test_seed(708));
    for (int i = 0; i < 5; ++i) {
        cuts += truncation_sweep(random_journal(rng, uniform(rng, 2, 30), uniform(rng, 1, 10)),
                                 "random " + std::to_string(i));
    }
    return std::to_string(cuts) + " truncation offsets";
}

struct ContractCase {
    std::string method;
    std::string target;
    std::string body;
    int status;
    std::string code;  // empty for success responses
};

std::string api_contract() {
    auto corpus = demo_corpus();
    corpus.records[1].deleted = true;
    corpus.records[1].metadata_xml.clear();
    auto transport = std::make_shared<InProcessTransport>(std::make_shared<mock::MockProvider>(corpus, fixed_instant));
    TempDir dir("mercury-accept-api");
    ServiceConfig config;
    config.store_dir = dir.path() / "store";
    config.cors_origin = "http://ui.example.org";
    Service service(config, transport, no_sleep());

    auto check = [&](const ContractCase& c) {
        auto r = service.handle({c.method, c.target, c.body});
        const std::string at = c.method + " " + c.target;
        require_eq(r.status, c.status, at + " status");
        require_eq(header_value(r, "Content-Type"), std::string("application/json"), at + " content type");
        require_eq(header_value(r, "Access-Control-Allow-Origin"), *config.cors_origin, at + " CORS origin");
        if (r.status == 204) return r;
        auto j = json::parse(r.body);
        if (!c.code.empty()) {
            require(j.is_object() && j.size() == 3, at + ": ApiError must have exactly status, code, message");
            require_eq(j["status"].get<int>(), c.status, at + " body status");
            require_eq(j["code"].get<std::string>(), c.code, at + " code");
            require(j["message"].is_string() && !j["message"].get<std::string>().empty(), at + " message");
        }
        return r;
    };

    check({"GET", "/health", "", 503, "not_ready"});
    check({"GET", "/api/search", "", 503, "not_ready"});
    check({"OPTIONS", "/api/search", "", 204, ""});
    service.open();

    std::size_t n = 0;
    const std::vector<ContractCase> before{
        {"GET", "/health", "", 200, ""},
        {"GET", "/api/providers", "", 200, ""},
        {"POST", "/api/providers", "{oops", 400, "bad_json"},
        {"POST", "/api/providers", R"({"provider_key":"BAD KEY","base_url":"http://x/oai"})", 400, "invalid_provider"},
        {"POST", "/api/providers", R"({"provider_key":"demo"})", 400, "invalid_provider"},
        {"POST", "/api/providers", json{{"provider_key", "demo"}, {"base_url", corpus.base_url}}.dump(), 201, ""},
        {"POST", "/api/providers", json{{"provider_key", "demo"}, {"base_url", corpus.base_url}}.dump(), 409,
         "provider_exists"},
        {"DELETE", "/api/providers", "", 405, "method_not_allowed"},
        {"POST", "/api/harvest/demo?mode=sometimes", "", 400, "bad_mode"},
        {"POST", "/api/harvest/ghost", "", 404, "unknown_provider"},
        {"GET", "/api/harvest/demo", "", 405, "method_not_allowed"},
        {"GET", "/api/harvest/runs/run-404", "", 404, "not_found"},
        {"POST", "/health", "", 405, "method_not_allowed"},
        {"GET", "/no/such/endpoint", "", 404, "not_found"},
    };
    for (const auto& c : before) check(c), ++n;

    auto providers = json::parse(service.handle({"GET", "/api/providers", ""}).body);
    require_eq(providers[0]["state"]["last_run_outcome"].get<std::string>(), std::string("never_run"),
               "state before harvest");

    // Conflict while a run is in flight: hold the first page until released.
    std::mutex m;
    std::condition_variable cv;
    bool entered = false, release = false;
    transport->intercept = [&](const std::string&) -> std::optional<HttpResponse> {
        std::unique_lock lock(m);
        entered = true;
        cv.notify_all();
        cv.wait(lock, [&] { return release; });
        return std::nullopt;
    };
    auto started = check({"POST", "/api/harvest/demo?mode=full", "", 202, ""});
    require_eq(header_value(started, "Location"), std::string("/api/harvest/runs/run-1"), "run Location");
    {
        std::unique_lock lock(m);
        cv.wait(lock, [&] { return entered; });
    }
    auto running = json::parse(check({"GET", "/api/harvest/runs/run-1", "", 200, ""}).body);
    require_eq(running["status"].get<std::string>(), std::string("running"), "run status while held");
    check({"POST", "/api/harvest/demo?mode=full", "", 409, "harvest_in_progress"});
    {
        std::lock_guard lock(m);
        release = true;
    }
    cv.notify_all();
    service.wait_for_runs();
    transport->intercept = nullptr;
    n += 3;

    auto run = json::parse(check({"GET", "/api/harvest/runs/run-1", "", 200, ""}).body);
    require_eq(run["status"].get<std::string>(), std::string("finished"), "run status");
    require_eq(run["report"]["new"].get<int>(), 24, "report new");
    require_eq(run["report"]["deleted"].get<int>(), 1, "report deleted");
    auto health = json::parse(check({"GET", "/health", "", 200, ""}).body);
    require_eq(health["live_records"].get<int>(), 24, "/health live_records");

    const std::string live_id = "demo:oai%253Amock.example.org%253Adataset%252F0001";
    const std::string dead_id = "demo:oai%253Amock.example.org%253Adataset%252F0002";
    auto record = json::parse(check({"GET", "/api/records/" + live_id, "", 200, ""}).body);
    require(record.contains("attributes") && record.contains("lineage"), "record lacks attributes or lineage");
    check({"GET", "/api/records/" + dead_id, "", 404, "not_found"});
    check({"GET", "/api/records/demo:unknown", "", 404, "not_found"});
    check({"POST", "/api/records/" + live_id, "", 405, "method_not_allowed"});
    for (const auto& [query, code] : std::vector<std::pair<std::string, std::string>>{
             {"bbox=1,2,3", "bad_bbox"},
             {"start=whenever", "bad_start"},
             {"end=2001-02-30", "bad_end"},
             {"page=0", "bad_page"},
             {"size=1000", "bad_size"},
             {"provider=%20", "bad_provider"},
             {"keyword=", "bad_keyword"},
             {"q=a&q=b", "bad_q"},
         }) {
        check({"GET", "/api/search?" + query, "", 400, code});
    }
    n += 15;
    require_index_agrees(service.catalog(), "api contract");

    // Golden search bodies over the unmodified 25-record fixture.
    TempDir golden_dir("mercury-accept-golden");
    ServiceConfig gconfig;
    gconfig.store_dir = golden_dir.path() / "store";
    harvest_demo(gconfig.store_dir);
    Service golden_service(gconfig, transport, no_sleep());
    golden_service.open();
    auto live = live_records(golden_service.catalog().store());
    require_eq(live.size(), 25u, "fixture live records");
    std::size_t goldens = 0;
    for (const auto& c : search_cases()) {
        auto r = golden_service.handle({"GET", "/api/search?" + c.query, ""});
        require_eq(r.status, 200, c.name + " status");
        auto q = parse_search_params(url_arguments("?" + c.query));
        require(r.body == search_body(golden_service.catalog().index(), q), c.name + ": body differs from engine");
        auto d = body_disagreement(r.body, oracle_search(live, q), q);
        require(!d, c.name + ": " + d.value_or(""));
        require(fs::exists(golden_path(c)), c.name + ": golden file missing (run --write-golden)");
        require(r.body == read_file(golden_path(c)), c.name + ": body differs from golden");
        ++goldens;
    }
    return std::to_string(n) + " contract checks, " + std::to_string(goldens) + " golden bodies";
}

std::string cli_api_equivalence() {
    TempDir dir("mercury-accept-cli");
    auto store_dir = dir.path() / "store";
    harvest_demo(store_dir);
    ServiceConfig config;
    config.store_dir = store_dir;
    Service service(config);
    service.open();
    std::size_t n = 0;
    for (const auto& c : search_cases()) {
        auto args = cli_search_args(c.query);
        args.insert(args.begin(), {"--store", store_dir.string()});
        std::ostringstream out, err;
        int code = cli::run(args, out, err);
        require_eq(code, 0, c.name + " exit code (" + err.str() + ")");
        auto api = service.handle({"GET", "/api/search?" + c.query, ""});
        require_eq(api.status, 200, c.name + " API status");
        require(out.str() == api.body, c.name + ": CLI output differs from API body");
        ++n;
    }
    require_eq(n, 10u, "golden cases");
    return std::to_string(n) + " cases byte-equal";
}

int write_goldens() {
    TempDir dir("mercury-golden");
    harvest_demo(dir.path() / "store");
    Catalog catalog(dir.path() / "store");
    auto live = live_records(catalog.store());
    for (const auto& c : search_cases()) {
        auto q = parse_search_params(url_arguments("?" + c.query));
        auto body = search_body(catalog.index(), q);
        if (auto d = body_disagreement(body, oracle_search(live, q), q)) {
            std::cerr << c.name << ": engine disagrees with oracle: " << *d << "\n";
            return 1;
        }
        fs::create_directories(golden_path(c).parent_path());
        write_file(golden_path(c), body);
        std::cout << "wrote " << golden_path(c).string() << "\n";
    }
    return 0;
}

struct Criterion {
    const char* name;
    double limit_seconds;  // 0: no limit
    std::function<std::string()> run;
};

} // namespace

int main(int argc, char** argv) {
    if (argc > 1 && std::string(argv[1]) == "--write-golden") return write_goldens();
    if (argc > 1) {
        std::cerr << "usage: mercury_acceptance [--write-golden]\n";
        return 2;
    }

    const std::vector<Criterion> criteria{
        {"full-harvest", 10, full_harvest},
        {"incremental-harvest", 60, incremental_harvest},
        {"ranking-oracle", 30, ranking_oracle},
        {"spatiotemporal-oracle", 5, spatiotemporal_oracle},
        {"protocol-conformance", 30, protocol_conformance},
        {"crash-consistency", 30, crash_consistency},
        {"api-contract", 10, api_contract},
        {"cli-api-equivalence", 0, cli_api_equivalence},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        auto start = std::chrono::steady_clock::now();
        std::string detail;
        bool ok = true;
        try {
            detail = c.run();
        } catch (const Failed& f) {
            ok = false;
            detail = f.why;
        } catch (const std::exception& e) {
            ok = false;
            detail = std::string("exception: ") + e.what();
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (ok && c.limit_seconds > 0 && secs >= c.limit_seconds) {
            ok = false;
            detail += " (time limit " + std::to_string(static_cast<int>(c.limit_seconds)) + " s exceeded)";
        }
        failures += !ok;
        char timing[64];
        if (c.limit_seconds > 0) {
            std::snprintf(timing, sizeof timing, "%.2f s / %.0f s", secs, c.limit_seconds);
        } else {
            std::snprintf(timing, sizeof timing, "%.2f s", secs);
        }
        std::cout << (ok ? "PASS " : "FAIL ") << c.name << "  [" << timing << "]  " << detail << std::endl;
    }
    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << "\n";
    return failures == 0 ? 0 : 1;
}
