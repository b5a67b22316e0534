#include "mercury/service.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>

#include <httplib.h>

#include "mercury/error.hpp"
#include "mercury/oai.hpp"
#include "mercury/query.hpp"

namespace mercury {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string dump(const json& j) { return j.dump(-1, ' ', false, json::error_handler_t::replace) + "\n"; }

ApiResponse json_response(int status, const json& body) { return {status, dump(body), {}}; }

ApiResponse error_response(int status, std::string code, std::string message) {
    return json_response(status, to_json(ApiError{status, std::move(code), std::move(message)}));
}

// Path segments decode %XX only; '+' stays literal.
std::string decode_path(std::string_view text) {
    std::string out;
    auto hex = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        return -1;
    };
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] == '%' && i + 2 < text.size() && hex(text[i + 1]) >= 0 && hex(text[i + 2]) >= 0) {
            out.push_back(static_cast<char>(hex(text[i + 1]) * 16 + hex(text[i + 2])));
            i += 2;
        } else {
            out.push_back(text[i]);
        }
    }
    return out;
}

SearchParams parse_query_string(std::string_view query) {
    SearchParams params;
    while (!query.empty()) {
        auto amp = query.find('&');
        std::string_view pair = query.substr(0, amp);
        query = amp == std::string_view::npos ? std::string_view{} : query.substr(amp + 1);
        if (pair.empty()) continue;
        auto eq = pair.find('=');
        std::string name = oai::percent_decode(pair.substr(0, eq));
        std::string value = eq == std::string_view::npos ? std::string{} : oai::percent_decode(pair.substr(eq + 1));
        params.emplace_back(std::move(name), std::move(value));
    }
    return params;
}

std::optional<std::string> param(const SearchParams& params, std::string_view name) {
    for (const auto& [n, v] : params) {
        if (n == name) return v;
    }
    return std::nullopt;
}

bool starts_with(std::string_view s, std::string_view prefix) { return s.substr(0, prefix.size()) == prefix; }

} // namespace

std::pair<std::string, int> parse_listen(std::string_view text) {
    auto colon = text.rfind(':');
    if (colon == std::string_view::npos) throw ValidationError("listen address must be host:port");
    std::string host(text.substr(0, colon));
    auto digits = text.substr(colon + 1);
    int port = -1;
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), port);
    if (digits.empty() || ec != std::errc{} || ptr != digits.data() + digits.size() || port < 0 || port > 65535) {
        throw ValidationError("bad port in listen address '" + std::string(text) + "'");
    }
    if (host.empty()) host = "0.0.0.0";
    return {host, port};
}

ServiceConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config file " + path.string());
    ServiceConfig c;
    try {
        json j = json::parse(in);
        if (!j.is_object()) throw ValidationError("config must be a JSON object");
        const fs::path base = path.parent_path();
        auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };
        if (j.contains("store_dir")) c.store_dir = resolve(j["store_dir"].get<std::string>());
        if (j.contains("listen")) std::tie(c.host, c.port) = parse_listen(j["listen"].get<std::string>());
        if (j.contains("providers_file")) c.providers_file = resolve(j["providers_file"].get<std::string>());
        if (j.contains("log_level")) {
            c.log_level = j["log_level"].get<std::string>();
            if (c.log_level != "debug" && c.log_level != "info" && c.log_level != "warn" && c.log_level != "error") {
                throw ValidationError("log_level must be debug, info, warn or error");
            }
        }
        if (j.contains("cors_origin") && !j["cors_origin"].is_null()) {
            c.cors_origin = j["cors_origin"].get<std::string>();
        }
    } catch (const json::exception& e) {
        throw ValidationError("config " + path.string() + ": " + e.what());
    }
    return c;
}

std::optional<fs::path> config_path(const std::optional<fs::path>& explicit_path) {
    if (explicit_path) return explicit_path;
    if (const char* env = std::getenv("MERCURY_CONFIG"); env && *env) return fs::path(env);
    return std::nullopt;
}

json to_json(const ApiError& e) { return json{{"status", e.status}, {"code", e.code}, {"message", e.message}}; }

json to_json(const HarvestRun& run) {
    json j{{"run_id", run.run_id},
           {"provider_key", run.provider_key},
           {"mode", mode_name(run.mode)},
           {"status", run.finished ? (run.report && run.report->error ? "failed" : "finished") : "running"},
           {"started_at", format_rfc3339(run.started_at)}};
    if (run.finished_at) j["finished_at"] = format_rfc3339(*run.finished_at);
    if (run.report) j["report"] = to_json(*run.report);
    return j;
}

Service::Service(ServiceConfig config, std::shared_ptr<Transport> transport, Sleeper sleeper)
    : config_(std::move(config)),
      transport_(std::move(transport)),
      sleeper_(std::move(sleeper)),
      started_(std::chrono::steady_clock::now()) {}

Service::~Service() {
    stop();
    wait_for_runs();
}

void Service::open() {
    if (ready_) return;
    catalog_ = std::make_unique<Catalog>(config_.store_dir);
    harvester_ = std::make_unique<Harvester>(*catalog_, *transport_, sleeper_);
    seed_providers();
    ready_ = true;
}

void Service::seed_providers() {
    if (!config_.providers_file) return;
    std::ifstream in(*config_.providers_file);
    if (!in) throw ValidationError("cannot open providers file " + config_.providers_file->string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ValidationError("providers file: " + std::string(e.what()));
    }
    if (!j.is_array()) throw ValidationError("providers file must hold a JSON array");
    for (const auto& item : j) {
        auto config = provider_from_json(item);
        if (!catalog_->store().provider(config.provider_key)) catalog_->store().add_provider(config);
    }
}

Catalog& Service::catalog() {
    if (!catalog_) throw UsageError("service not opened");
    return *catalog_;
}

ApiResponse Service::handle(const ApiRequest& request) {
    auto qpos = request.target.find('?');
    std::string path = request.target.substr(0, qpos);
    std::string query = qpos == std::string::npos ? std::string{} : request.target.substr(qpos + 1);

    ApiResponse response;
    if (request.method == "OPTIONS") {
        response.status = 204;
    } else if (!ready_) {
        std::lock_guard lock(open_mutex_);
        response = error_response(503, "not_ready",
                                  open_error_.empty() ? "journal replay in progress" : "store failed to open: " + open_error_);
    } else {
        try {
            response = route(request.method, path, query, request.body);
        } catch (const std::exception& e) {
            response = error_response(500, "internal_error", e.what());
        }
    }
    response.headers.emplace_back("Content-Type", "application/json");
    if (config_.cors_origin) {
        response.headers.emplace_back("Access-Control-Allow-Origin", *config_.cors_origin);
        response.headers.emplace_back("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
        response.headers.emplace_back("Access-Control-Allow-Headers", "Content-Type");
        response.headers.emplace_back("Vary", "Origin");
    }
    return response;
}

ApiResponse Service::route(const std::string& method, const std::string& path, const std::string& query,
                           const std::string& body) {
    auto only = [&](const char* allowed) -> std::optional<ApiResponse> {
        if (method == allowed) return std::nullopt;
        return error_response(405, "method_not_allowed", method + " not allowed on " + path);
    };

    if (path == "/health") {
        if (auto r = only("GET")) return *r;
        return health();
    }
    if (path == "/api/search") {
        if (auto r = only("GET")) return *r;
        return search(query);
    }
    if (path == "/api/providers") {
        if (method == "GET") return list_providers();
        if (method == "POST") return add_provider(body);
        return error_response(405, "method_not_allowed", method + " not allowed on " + path);
    }
    constexpr std::string_view records = "/api/records/";
    if (starts_with(path, records) && path.size() > records.size()) {
        if (auto r = only("GET")) return *r;
        return record(path.substr(records.size()));
    }
    constexpr std::string_view runs = "/api/harvest/runs/";
    if (starts_with(path, runs) && path.size() > runs.size()) {
        if (auto r = only("GET")) return *r;
        return get_run(decode_path(path.substr(runs.size())));
    }
    constexpr std::string_view harvest = "/api/harvest/";
    if (starts_with(path, harvest) && path.size() > harvest.size() &&
        path.find('/', harvest.size()) == std::string::npos) {
        if (auto r = only("POST")) return *r;
        return trigger_harvest(decode_path(path.substr(harvest.size())), query);
    }
    return error_response(404, "not_found", "no such endpoint: " + path);
}

ApiResponse Service::health() {
    auto uptime = std::chrono::duration_cast<std::chrono::seconds>(std::chrono::steady_clock::now() - started_);
    return json_response(200, json{{"status", "ok"},
                                   {"live_records", catalog_->store().live_count()},
                                   {"providers", catalog_->store().providers().size()},
                                   {"uptime_seconds", uptime.count()}});
}

ApiResponse Service::search(const std::string& query) {
    Query q;
    try {
        q = parse_search_params(parse_query_string(query));
    } catch (const ParamError& e) {
        return error_response(400, e.code(), e.what());
    }
    return {200, search_body(catalog_->index(), q), {}};
}

ApiResponse Service::record(const std::string& encoded_id) {
    std::string id = decode_path(encoded_id);
    auto found = catalog_->store().get(RecordId::from_string(id));
    // Clients that paste a record id without escaping it send its %XX
    // sequences raw; accept that spelling as well.
    if (!found && id != encoded_id) found = catalog_->store().get(RecordId::from_string(encoded_id));
    if (!found) return error_response(404, "not_found", "no live record '" + id + "'");
    return json_response(200, to_json(*found));
}

ApiResponse Service::list_providers() {
    json list = json::array();
    for (const auto& p : catalog_->store().providers()) {
        json j = to_json(p);
        j["state"] = to_json(catalog_->store().state(p.provider_key));
        list.push_back(std::move(j));
    }
    return json_response(200, list);
}

ApiResponse Service::add_provider(const std::string& body) {
    json j;
    try {
        j = json::parse(body);
    } catch (const json::exception& e) {
        return error_response(400, "bad_json", std::string("request body is not JSON: ") + e.what());
    }
    ProviderConfig config;
    try {
        config = provider_from_json(j);
        catalog_->store().add_provider(config);
    } catch (const ConflictError& e) {
        return error_response(409, "provider_exists", e.what());
    } catch (const ValidationError& e) {
        return error_response(400, "invalid_provider", e.what());
    }
    json out = to_json(config);
    out["state"] = to_json(catalog_->store().state(config.provider_key));
    auto response = json_response(201, out);
    response.headers.emplace_back("Location", "/api/providers/" + config.provider_key);
    return response;
}

ApiResponse Service::trigger_harvest(const std::string& provider_key, const std::string& query) {
    HarvestMode mode = HarvestMode::incremental;
    if (auto m = param(parse_query_string(query), "mode")) {
        auto parsed = mode_from_name(*m);
        if (!parsed) return error_response(400, "bad_mode", "mode must be full or incremental");
        mode = *parsed;
    }
    auto provider = catalog_->store().provider(provider_key);
    if (!provider) return error_response(404, "unknown_provider", "no provider '" + provider_key + "'");

    std::optional<Harvester::Guard> guard;
    try {
        guard.emplace(harvester_->begin(provider_key));
    } catch (const HarvestInProgress& e) {
        return error_response(409, "harvest_in_progress", e.what());
    }

    HarvestRun run;
    run.provider_key = provider_key;
    run.mode = mode;
    run.started_at = now_utc();
    {
        std::lock_guard lock(runs_mutex_);
        run.run_id = "run-" + std::to_string(next_run_++);
        runs_[run.run_id] = run;
        run_threads_.emplace_back([this, g = std::move(*guard), config = *provider, mode, id = run.run_id]() mutable {
            HarvestReport report;
            try {
                auto result = harvester_->harvest(config, catalog_->store().state(config.provider_key), mode);
                catalog_->store().save_state(result.state);
                report = std::move(result.report);
            } catch (const std::exception& e) {
                report.provider_key = config.provider_key;
                report.mode = mode;
                report.error = e.what();
            }
            {
                std::lock_guard lock(runs_mutex_);
                auto& r = runs_[id];
                r.report = std::move(report);
                r.finished_at = now_utc();
                r.finished = true;
            }
            // Release the provider only after the run is visible as finished.
            auto release = std::move(g);
        });
    }
    auto response = json_response(202, to_json(run));
    response.headers.emplace_back("Location", "/api/harvest/runs/" + run.run_id);
    return response;
}

ApiResponse Service::get_run(const std::string& run_id) {
    auto run = harvest_run(run_id);
    if (!run) return error_response(404, "not_found", "no harvest run '" + run_id + "'");
    return json_response(200, to_json(*run));
}

std::optional<HarvestRun> Service::harvest_run(const std::string& run_id) const {
    std::lock_guard lock(runs_mutex_);
    auto it = runs_.find(run_id);
    if (it == runs_.end()) return std::nullopt;
    return it->second;
}

void Service::wait_for_runs() {
    for (;;) {
        std::vector<std::thread> threads;
        {
            std::lock_guard lock(runs_mutex_);
            threads.swap(run_threads_);
        }
        if (threads.empty()) return;
        for (auto& t : threads) t.join();
    }
}

int Service::bind() {
    server_ = std::make_unique<httplib::Server>();
    auto handler = [this](const httplib::Request& req, httplib::Response& res) {
        auto out = handle({req.method, req.target, req.body});
        res.status = out.status;
        std::string content_type = "application/json";
        for (const auto& [name, value] : out.headers) {
            if (name == "Content-Type") {
                content_type = value;
            } else {
                res.set_header(name, value);
            }
        }
        if (out.status != 204) res.set_content(out.body, content_type);
    };
    server_->Get(".*", handler);
    server_->Post(".*", handler);
    server_->Put(".*", handler);
    server_->Delete(".*", handler);
    server_->Patch(".*", handler);
    server_->Options(".*", handler);

    int port = config_.port;
    if (port == 0) {
        port = server_->bind_to_any_port(config_.host);
    } else if (!server_->bind_to_port(config_.host, port)) {
        port = -1;
    }
    if (port < 0) throw Error("cannot bind " + config_.host + ":" + std::to_string(config_.port));
    return port;
}

int Service::start() {
    int port = bind();
    server_thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
    open_thread_ = std::thread([this] { open_in_background(false); });
    return port;
}

void Service::run() {
    bind();
    open_thread_ = std::thread([this] { open_in_background(true); });
    server_->listen_after_bind();
    if (open_thread_.joinable()) open_thread_.join();
    std::lock_guard lock(open_mutex_);
    if (!open_error_.empty()) throw StoreError(open_error_);
}

void Service::open_in_background(bool stop_on_failure) {
    try {
        open();
    } catch (const std::exception& e) {
        {
            std::lock_guard lock(open_mutex_);
            open_error_ = e.what();
        }
        if (stop_on_failure) server_->stop();
    }
}

void Service::stop() {
    if (server_) server_->stop();
    if (server_thread_.joinable()) server_thread_.join();
    if (open_thread_.joinable()) open_thread_.join();
}

} // namespace mercury
