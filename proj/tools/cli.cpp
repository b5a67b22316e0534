#include "cli.hpp"

#include <csignal>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <pthread.h>
#include <thread>

#include <CLI11.hpp>

#include "mercury/catalog.hpp"
#include "mercury/error.hpp"
#include "mercury/mock_provider.hpp"
#include "mercury/query.hpp"
#include "mercury/service.hpp"

namespace mercury::cli {

namespace {

namespace fs = std::filesystem;

struct Options {
    std::optional<std::string> store;
    std::optional<std::string> config;

    std::optional<std::string> listen;
    std::optional<std::string> cors_origin;

    std::string provider_key;
    std::string base_url;
    std::string metadata_prefix = "oai_dc";
    std::optional<std::string> set;
    double page_timeout = 30;

    bool full = false;
    bool json = false;

    std::optional<std::string> q;
    std::optional<std::string> bbox, start, end, provider, keyword, page, size;

    std::string out_file;
    std::string corpus;

    std::uint64_t seed = 1;
    std::size_t records = 25;
    std::size_t deleted = 0;
    std::size_t page_size = 10;
    std::string granularity = "seconds";
};

/// Invalid input discovered after flag parsing; exits 2.
struct UsageFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

ServiceConfig resolve_config(const Options& o) {
    ServiceConfig config;
    std::optional<fs::path> explicit_path;
    if (o.config) explicit_path = fs::path(*o.config);
    if (auto path = config_path(explicit_path)) config = load_config(*path);
    if (o.store) config.store_dir = *o.store;
    if (o.listen) std::tie(config.host, config.port) = parse_listen(*o.listen);
    if (o.cors_origin) config.cors_origin = *o.cors_origin;
    return config;
}

// Runs `serve_fn` until it returns or SIGINT/SIGTERM arrives, in which case
// `stop_fn` is called from a watcher thread.
template <class Serve, class Stop>
void serve_until_signal(Serve serve_fn, Stop stop_fn) {
    sigset_t signals, previous;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, &previous);
    std::atomic<bool> done{false};
    std::thread watcher([&] {
        int sig = 0;
        sigwait(&signals, &sig);
        if (!done) stop_fn();
    });
    try {
        serve_fn();
    } catch (...) {
        done = true;
        pthread_kill(watcher.native_handle(), SIGTERM);
        watcher.join();
        pthread_sigmask(SIG_SETMASK, &previous, nullptr);
        throw;
    }
    done = true;
    pthread_kill(watcher.native_handle(), SIGTERM);
    watcher.join();
    pthread_sigmask(SIG_SETMASK, &previous, nullptr);
}

void print_report(std::ostream& out, const HarvestReport& r) {
    auto row = [&](const char* name, const auto& value) {
        out << std::left << std::setw(11) << name << value << "\n";
    };
    row("provider", r.provider_key);
    row("mode", mode_name(r.mode));
    row("pages", r.pages);
    row("new", r.new_records);
    row("updated", r.updated);
    row("unchanged", r.unchanged);
    row("deleted", r.deleted);
    row("warnings", r.warnings);
    if (r.error) row("error", *r.error);
    for (const auto& m : r.messages) out << "  - " << m << "\n";
}

void print_hits(std::ostream& out, const SearchResult& result, const Query& query) {
    out << result.total << " matching record" << (result.total == 1 ? "" : "s");
    if (result.total > 0) {
        std::size_t first = (query.page - 1) * query.size + 1;
        out << " (showing " << first << "-" << first + result.hits.size() - 1 << ")";
    }
    out << "\n";
    std::size_t rank = (query.page - 1) * query.size;
    for (const auto& h : result.hits) {
        out << std::right << std::setw(4) << ++rank << "  " << std::fixed << std::setprecision(4) << std::setw(9)
            << h.score << "  " << h.record_id.str() << "\n      " << h.title << "\n";
    }
    out.unsetf(std::ios::floatfield);
    if (!result.provider_facets.empty()) {
        out << "providers:";
        for (const auto& [key, count] : result.provider_facets) out << " " << key << "=" << count;
        out << "\n";
    }
    if (!result.keyword_facets.empty()) {
        out << "keywords:";
        for (const auto& k : result.keyword_facets) out << " \"" << k.keyword << "\"=" << k.count;
        out << "\n";
    }
}

std::string dump(const nlohmann::json& j) {
    return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) + "\n";
}

int cmd_serve(const Options& o, std::ostream& out, const Context& ctx) {
    auto config = resolve_config(o);
    auto transport = ctx.transport ? ctx.transport : std::make_shared<HttpTransport>();
    Service service(config, transport, ctx.sleeper);
    out << "serving " << config.store_dir.string() << " on http://" << config.host << ":" << config.port << std::endl;
    serve_until_signal([&] { service.run(); }, [&] { service.stop(); });
    service.wait_for_runs();
    return kExitOk;
}

int cmd_provider_add(const Options& o, std::ostream& out) {
    ProviderConfig p;
    p.provider_key = o.provider_key;
    p.base_url = o.base_url;
    p.metadata_prefix = o.metadata_prefix;
    p.set = o.set;
    p.page_timeout = o.page_timeout;
    try {
        validate_provider(p);
    } catch (const ValidationError& e) {
        throw UsageFailure(e.what());
    }
    Store store(resolve_config(o).store_dir);
    store.add_provider(p);
    out << "added provider " << p.provider_key << "\n";
    return kExitOk;
}

int cmd_provider_list(const Options& o, std::ostream& out) {
    Store store(resolve_config(o).store_dir);
    if (o.json) {
        nlohmann::json list = nlohmann::json::array();
        for (const auto& p : store.providers()) {
            auto j = to_json(p);
            j["state"] = to_json(store.state(p.provider_key));
            list.push_back(std::move(j));
        }
        out << dump(list);
        return kExitOk;
    }
    for (const auto& p : store.providers()) {
        auto s = store.state(p.provider_key);
        out << std::left << std::setw(16) << p.provider_key << " " << std::setw(10) << outcome_name(s.last_run_outcome)
            << " " << (s.last_success_datestamp ? format_rfc3339(*s.last_success_datestamp) : "-") << "  "
            << p.base_url << "\n";
    }
    return kExitOk;
}

int cmd_provider_remove(const Options& o, std::ostream& out, std::ostream& err) {
    Store store(resolve_config(o).store_dir);
    if (!store.remove_provider(o.provider_key)) {
        err << "error: unknown provider '" << o.provider_key << "'\n";
        return kExitFailure;
    }
    out << "removed provider " << o.provider_key << "\n";
    return kExitOk;
}

int cmd_harvest(const Options& o, std::ostream& out, std::ostream& err, const Context& ctx) {
    Catalog catalog(resolve_config(o).store_dir);
    auto provider = catalog.store().provider(o.provider_key);
    if (!provider) {
        err << "error: unknown provider '" << o.provider_key << "'\n";
        return kExitFailure;
    }
    auto transport = ctx.transport ? ctx.transport : std::make_shared<HttpTransport>();
    Harvester harvester(catalog, *transport, ctx.sleeper);
    auto report = harvester.run(*provider, o.full ? HarvestMode::full : HarvestMode::incremental);
    if (o.json) {
        out << dump(to_json(report));
    } else {
        print_report(out, report);
    }
    if (report.error) {
        err << "error: harvest failed: " << *report.error << "\n";
        return kExitFailure;
    }
    return kExitOk;
}

int cmd_search(const Options& o, std::ostream& out) {
    // Same parameter names and parser as GET /api/search.
    SearchParams params;
    auto add = [&](const char* name, const std::optional<std::string>& v) {
        if (v) params.emplace_back(name, *v);
    };
    add("q", o.q);
    add("bbox", o.bbox);
    add("start", o.start);
    add("end", o.end);
    add("provider", o.provider);
    add("keyword", o.keyword);
    add("page", o.page);
    add("size", o.size);
    Query query;
    try {
        query = parse_search_params(params);
    } catch (const ParamError& e) {
        throw UsageFailure(std::string(e.what()) + " [" + e.code() + "]");
    }
    Catalog catalog(resolve_config(o).store_dir);
    if (o.json) {
        out << search_body(catalog.index(), query);
    } else {
        print_hits(out, catalog.index().search(query), query);
    }
    return kExitOk;
}

int cmd_reindex(const Options& o, std::ostream& out) {
    Catalog catalog(resolve_config(o).store_dir);
    auto n = catalog.reindex();
    out << "indexed " << n << " live record" << (n == 1 ? "" : "s") << "\n";
    return kExitOk;
}

int cmd_compact(const Options& o, std::ostream& out) {
    Catalog catalog(resolve_config(o).store_dir);
    auto n = catalog.compact();
    out << "compacted journal to " << n << " entr" << (n == 1 ? "y" : "ies") << "\n";
    return kExitOk;
}

int cmd_export(const Options& o, std::ostream& out) {
    Store store(resolve_config(o).store_dir);
    std::string lines;
    auto live = store.live();
    for (const auto& [id, record] : live) lines += dump(to_json(record));
    write_file_atomic(o.out_file, lines);
    out << "exported " << live.size() << " record" << (live.size() == 1 ? "" : "s") << " to " << o.out_file << "\n";
    return kExitOk;
}

int cmd_mock_provider(const Options& o, std::ostream& out) {
    auto corpus = mock::load_corpus(o.corpus);
    auto [host, port] = parse_listen(o.listen.value_or("127.0.0.1:8081"));
    corpus.base_url = "http://" + host + ":" + std::to_string(port) + "/oai";
    auto provider = std::make_shared<mock::MockProvider>(std::move(corpus));
    mock::MockServer server(provider);
    out << "mock OAI-PMH provider with " << provider->corpus()->records.size() << " records at "
        << provider->corpus()->base_url << std::endl;
    serve_until_signal([&, h = host, p = port] { server.listen_blocking(h, p); }, [&] { server.stop(); });
    return kExitOk;
}

int cmd_generate_corpus(const Options& o, std::ostream& out) {
    mock::GeneratorOptions g;
    g.records = o.records;
    g.deleted = o.deleted;
    g.page_size = o.page_size;
    auto granularity = granularity_from_name(o.granularity);
    if (!granularity) throw UsageFailure("granularity must be day or seconds");
    g.granularity = *granularity;
    if (g.deleted > g.records) throw UsageFailure("--deleted exceeds --records");
    auto corpus = mock::generate_corpus(o.seed, g);
    write_file_atomic(o.out_file, mock::to_json(corpus).dump(2) + "\n");
    out << "wrote " << corpus.records.size() << " records to " << o.out_file << "\n";
    return kExitOk;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const Context& context) {
    Options o;
    CLI::App app{"Mercury metadata harvester and search service", "mercury"};
    app.require_subcommand(1);
    app.add_option("--store", o.store, "Store directory (overrides the config file)");
    app.add_option("--config", o.config, "Config file (default: $MERCURY_CONFIG)");

    auto* serve = app.add_subcommand("serve", "Run the HTTP API");
    serve->add_option("--listen", o.listen, "host:port");
    serve->add_option("--cors-origin", o.cors_origin, "Origin allowed to call the API from a browser");

    auto* provider = app.add_subcommand("provider", "Manage providers");
    provider->require_subcommand(1);
    auto* add = provider->add_subcommand("add", "Register a provider");
    add->add_option("key", o.provider_key, "Provider key ([a-z0-9_-]+)")->required();
    add->add_option("base_url", o.base_url, "OAI-PMH base URL")->required();
    add->add_option("--prefix", o.metadata_prefix, "Metadata prefix");
    add->add_option("--set", o.set, "Restrict harvesting to one set");
    add->add_option("--timeout", o.page_timeout, "Seconds allowed per page request");
    auto* list = provider->add_subcommand("list", "List providers and their harvest state");
    list->add_flag("--json", o.json, "JSON output");
    auto* remove = provider->add_subcommand("remove", "Unregister a provider");
    remove->add_option("key", o.provider_key)->required();

    auto* harvest = app.add_subcommand("harvest", "Harvest one provider");
    harvest->add_option("key", o.provider_key)->required();
    harvest->add_flag("--full", o.full, "Re-list everything instead of records changed since the last harvest");
    harvest->add_flag("--json", o.json, "Print the report as JSON");

    auto* search = app.add_subcommand("search", "Search the index");
    search->add_option("q", o.q, "Free-text query");
    search->add_option("--bbox", o.bbox, "west,south,east,north");
    search->add_option("--start", o.start, "Interval start (YYYY-MM-DD or RFC 3339)");
    search->add_option("--end", o.end, "Interval end (YYYY-MM-DD or RFC 3339)");
    search->add_option("--provider", o.provider, "Only this provider");
    search->add_option("--keyword", o.keyword, "Only records with this keyword");
    search->add_option("--page", o.page, "Page number (from 1)");
    search->add_option("--size", o.size, "Hits per page (at most 100)");
    search->add_flag("--json", o.json, "Print the /api/search response body");

    auto* reindex = app.add_subcommand("reindex", "Replay the journal and rebuild the index");
    auto* compact = app.add_subcommand("compact", "Rewrite the journal with one entry per live record");

    auto* exp = app.add_subcommand("export", "Write live records as JSON lines");
    exp->add_option("--out", o.out_file, "Output file")->required();

    auto* mock_cmd = app.add_subcommand("mock-provider", "Serve a corpus as an OAI-PMH provider");
    mock_cmd->add_option("--corpus", o.corpus, "Corpus JSON file")->required();
    mock_cmd->add_option("--listen", o.listen, "host:port (default 127.0.0.1:8081)");

    auto* gen = app.add_subcommand("generate-corpus", "Write a synthetic mock-provider corpus");
    gen->add_option("--out", o.out_file, "Output file")->required();
    gen->add_option("--seed", o.seed, "Generator seed");
    gen->add_option("--records", o.records, "Number of records");
    gen->add_option("--deleted", o.deleted, "How many of them are deleted");
    gen->add_option("--page-size", o.page_size, "Records per ListRecords page");
    gen->add_option("--granularity", o.granularity, "day or seconds");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::Success&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kExitUsage;
    }

    try {
        if (serve->parsed()) return cmd_serve(o, out, context);
        if (add->parsed()) return cmd_provider_add(o, out);
        if (list->parsed()) return cmd_provider_list(o, out);
        if (remove->parsed()) return cmd_provider_remove(o, out, err);
        if (harvest->parsed()) return cmd_harvest(o, out, err, context);
        if (search->parsed()) return cmd_search(o, out);
        if (reindex->parsed()) return cmd_reindex(o, out);
        if (compact->parsed()) return cmd_compact(o, out);
        if (exp->parsed()) return cmd_export(o, out);
        if (mock_cmd->parsed()) return cmd_mock_provider(o, out);
        if (gen->parsed()) return cmd_generate_corpus(o, out);
    } catch (const UsageFailure& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ConflictError& e) {
        err << "error: " << e.what() << "\n";
        return kExitFailure;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitUsage;
}

} // namespace mercury::cli
