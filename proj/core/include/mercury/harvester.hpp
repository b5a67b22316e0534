#pragma once

#include <chrono>
#include <functional>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mercury/catalog.hpp"
#include "mercury/oai.hpp"
#include "mercury/provider.hpp"

namespace mercury {

struct HttpResponse {
    int status = 0;
    std::string body;
    std::optional<std::string> retry_after;
};

/// Fetches a URL. Throws TransportError when no HTTP response was received.
class Transport {
public:
    virtual ~Transport() = default;
    virtual HttpResponse get(const std::string& url, std::chrono::milliseconds timeout) = 0;
};

/// cpp-httplib backed transport.
class HttpTransport final : public Transport {
public:
    HttpResponse get(const std::string& url, std::chrono::milliseconds timeout) override;
};

using Sleeper = std::function<void(std::chrono::seconds)>;

inline constexpr int kRetryBudget = 5;
inline constexpr std::chrono::seconds kMaxBackoff{60};
inline constexpr std::chrono::seconds kMaxRetryAfter{300};

/// min(2^(attempt-1), 60) seconds. Throws UsageError when attempt < 1.
std::chrono::seconds backoff_schedule(int attempt);

/// Delay before retrying after `attempt` failed: a 503's Retry-After header
/// (delta-seconds, capped at 300) wins over the computed backoff.
std::chrono::seconds retry_delay(int attempt, const HttpResponse* response);

struct PageStats {
    std::size_t new_records = 0;
    std::size_t updated = 0;
    std::size_t unchanged = 0;
    std::size_t deleted = 0;
    std::size_t warnings = 0;
    std::vector<std::string> messages;
};

/// Applies one page of harvested records to store and index: tombstones for
/// deletions (unconditionally), upserts for new or newer records, nothing
/// for records whose datestamp is not newer than the stored one. Records that
/// fail to parse or validate count as warnings and are skipped. A store
/// failure throws before the index is touched.
PageStats apply_page(Catalog& catalog, const std::vector<oai::RawRecord>& records, const ProviderConfig& provider);

struct HarvestResult {
    HarvestReport report;
    HarvestState state;
};

class Harvester {
public:
    Harvester(Catalog& catalog, Transport& transport, Sleeper sleeper = {});

    /// One harvest run. Never throws for provider-side problems; they end up
    /// in report.error with state.last_run_outcome = failed.
    HarvestResult harvest(const ProviderConfig& provider, const HarvestState& state, HarvestMode mode);

    /// harvest() with the persisted state, saving the updated state
    /// afterwards. Throws HarvestInProgress if the provider is busy.
    HarvestReport run(const ProviderConfig& provider, HarvestMode mode);

    /// Marks the provider busy for the guard's lifetime.
    class Guard {
    public:
        Guard(Guard&& other) noexcept;
        Guard(const Guard&) = delete;
        Guard& operator=(const Guard&) = delete;
        Guard& operator=(Guard&&) = delete;
        ~Guard();

    private:
        friend class Harvester;
        Guard(Harvester* owner, std::string key) : owner_(owner), key_(std::move(key)) {}
        Harvester* owner_;
        std::string key_;
    };

    /// Throws HarvestInProgress when a harvest for the provider is running.
    Guard begin(const std::string& provider_key);
    bool busy(const std::string& provider_key) const;

private:
    oai::Envelope fetch(const std::string& url, const ProviderConfig& provider);
    Granularity discover_granularity(const ProviderConfig& provider, HarvestReport& report);

    Catalog& catalog_;
    Transport& transport_;
    Sleeper sleeper_;
    mutable std::mutex running_mutex_;
    std::set<std::string> running_;
};

} // namespace mercury
