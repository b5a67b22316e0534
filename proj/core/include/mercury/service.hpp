#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "mercury/catalog.hpp"
#include "mercury/harvester.hpp"

namespace httplib {
class Server;
}

namespace mercury {

struct ServiceConfig {
    std::filesystem::path store_dir = "mercury-data";
    std::string host = "127.0.0.1";
    int port = 8080;
    /// Optional JSON array of provider configs added to the store at startup
    /// (keys already present are left alone).
    std::optional<std::filesystem::path> providers_file;
    std::string log_level = "info";
    /// Origin allowed by CORS headers; unset means same-origin only.
    std::optional<std::string> cors_origin;
};

/// Parses "host:port". Throws ValidationError.
std::pair<std::string, int> parse_listen(std::string_view text);

/// Reads a config file. Relative store_dir / providers_file paths resolve
/// against the file's directory. Throws ValidationError.
ServiceConfig load_config(const std::filesystem::path& path);

/// Config path to use: the explicit one if given, else $MERCURY_CONFIG, else
/// none.
std::optional<std::filesystem::path> config_path(const std::optional<std::filesystem::path>& explicit_path);

struct ApiError {
    int status = 500;
    std::string code;
    std::string message;
};

nlohmann::json to_json(const ApiError& error);

struct ApiRequest {
    std::string method;
    /// Raw request target: path (still percent-encoded) plus optional query.
    std::string target;
    std::string body;
};

struct ApiResponse {
    int status = 200;
    std::string body;
    std::vector<std::pair<std::string, std::string>> headers;
};

struct HarvestRun {
    std::string run_id;
    std::string provider_key;
    HarvestMode mode = HarvestMode::incremental;
    bool finished = false;
    Instant started_at{};
    std::optional<Instant> finished_at;
    std::optional<HarvestReport> report;
};

nlohmann::json to_json(const HarvestRun& run);

/// The HTTP API over one store directory. handle() is the whole API as a
/// function; start() puts it behind cpp-httplib.
class Service {
public:
    explicit Service(ServiceConfig config, std::shared_ptr<Transport> transport = std::make_shared<HttpTransport>(),
                     Sleeper sleeper = {});
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    /// Replays the journal and rebuilds the index. Until it returns, every
    /// endpoint answers 503.
    void open();
    bool ready() const noexcept { return ready_.load(); }

    ApiResponse handle(const ApiRequest& request);

    /// Binds and serves on a background thread, replaying the journal in the
    /// background too. Returns the bound port.
    int start();
    /// Serves on the calling thread until stop() is called from elsewhere.
    void run();
    void stop();

    /// Blocks until every harvest run started so far has finished.
    void wait_for_runs();

    std::optional<HarvestRun> harvest_run(const std::string& run_id) const;
    Catalog& catalog();
    const ServiceConfig& config() const noexcept { return config_; }

private:
    ApiResponse route(const std::string& method, const std::string& path, const std::string& query,
                      const std::string& body);
    ApiResponse health();
    ApiResponse search(const std::string& query);
    ApiResponse record(const std::string& encoded_id);
    ApiResponse list_providers();
    ApiResponse add_provider(const std::string& body);
    ApiResponse trigger_harvest(const std::string& provider_key, const std::string& query);
    ApiResponse get_run(const std::string& run_id);
    void seed_providers();
    int bind();
    void open_in_background(bool stop_on_failure);

    ServiceConfig config_;
    std::shared_ptr<Transport> transport_;
    Sleeper sleeper_;
    std::chrono::steady_clock::time_point started_;
    std::atomic<bool> ready_{false};
    std::unique_ptr<Catalog> catalog_;
    std::unique_ptr<Harvester> harvester_;

    mutable std::mutex runs_mutex_;
    std::map<std::string, HarvestRun> runs_;
    std::vector<std::thread> run_threads_;
    std::uint64_t next_run_ = 1;

    std::mutex open_mutex_;
    std::string open_error_;

    std::unique_ptr<httplib::Server> server_;
    std::thread server_thread_;
    std::thread open_thread_;
};

} // namespace mercury
