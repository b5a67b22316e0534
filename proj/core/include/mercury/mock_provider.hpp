#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "mercury/harvester.hpp"
#include "mercury/model.hpp"
#include "mercury/oai.hpp"

namespace httplib {
class Server;
}

namespace mercury::mock {

/// Structured oai_dc + extension payload, rendered to XML on load.
struct DcPayload {
    std::string title;
    std::vector<std::string> descriptions;
    std::vector<std::string> subjects;
    std::vector<std::string> coverage;
    std::vector<std::string> sources;
    std::vector<std::string> identifiers;
    std::vector<Attribute> attributes;
    std::string lineage;
};

std::string render_payload(const DcPayload& payload);

struct MockRecord {
    std::string identifier;
    Instant datestamp{};
    bool deleted = false;
    std::vector<std::string> sets;
    /// Present unless deleted.
    std::string metadata_xml;
};

struct FaultPlan {
    /// 1-based page of a listing answered with 503 once.
    std::optional<std::size_t> fail_page_once_503;
    std::int64_t retry_after_seconds = 1;
    /// After this many pages, the next token is rejected once
    /// (badResumptionToken).
    std::optional<std::size_t> expire_token_after_pages;
};

struct MockCorpus {
    std::string repository_name = "Mercury mock provider";
    std::string base_url = "http://localhost/oai";
    std::size_t page_size = 10;
    Granularity granularity = Granularity::seconds;
    std::vector<MockRecord> records;
    FaultPlan fault_plan;
};

/// Throws ValidationError for duplicate identifiers, a zero page size, or
/// datestamps finer than the declared granularity.
void validate_corpus(const MockCorpus& corpus);

MockCorpus corpus_from_json(const nlohmann::json& j);
nlohmann::json to_json(const MockCorpus& corpus);
MockCorpus load_corpus(const std::filesystem::path& path);

struct GeneratorOptions {
    std::size_t records = 25;
    std::size_t deleted = 0;
    std::size_t page_size = 10;
    Granularity granularity = Granularity::seconds;
    Instant first_datestamp = Instant{std::chrono::sys_days{std::chrono::year{2010} / 1 / 1}};
};

/// Deterministic synthetic ecology corpus. The same seed and options always
/// produce the same corpus. The first `deleted` records are tombstones.
MockCorpus generate_corpus(std::uint64_t seed, const GeneratorOptions& options);

/// Stateless OAI-PMH request handling over an immutable corpus snapshot. The
/// only mutable state is the fault-plan trigger flags and the table of issued
/// token filters.
class MockProvider {
public:
    using Clock = std::function<Instant()>;

    explicit MockProvider(MockCorpus corpus, Clock clock = {});

    /// Answers one request given its query parameters (verb included).
    HttpResponse handle(const oai::Arguments& params);

    /// Swaps in a new corpus; later requests see it.
    void replace_corpus(MockCorpus corpus);
    std::shared_ptr<const MockCorpus> corpus() const;

private:
    struct Filter {
        oai::Verb verb;
        std::optional<Instant> from;
        std::optional<Instant> until;
    };

    HttpResponse list(const MockCorpus& corpus, oai::Verb verb, const oai::Arguments& args);
    HttpResponse render(const MockCorpus& corpus, oai::Envelope env, bool echo_arguments);

    Clock clock_;
    mutable std::mutex mutex_;
    std::shared_ptr<const MockCorpus> corpus_;
    std::map<std::string, Filter> issued_;
    std::atomic<bool> failed_page_{false};
    std::atomic<bool> expired_token_{false};
};

/// Runs a MockProvider over HTTP on a background thread. Every path answers
/// OAI-PMH GET requests.
class MockServer {
public:
    explicit MockServer(std::shared_ptr<MockProvider> provider);
    ~MockServer();
    MockServer(const MockServer&) = delete;
    MockServer& operator=(const MockServer&) = delete;

    /// Binds host:port (port 0 picks a free one) and starts serving.
    /// Returns the bound port. Throws Error when binding fails.
    int start(const std::string& host, int port);
    void stop();
    /// Blocks serving on the calling thread.
    void listen_blocking(const std::string& host, int port);

    int port() const noexcept { return port_; }

private:
    void install_routes();

    std::shared_ptr<MockProvider> provider_;
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
    int port_ = 0;
};

} // namespace mercury::mock
