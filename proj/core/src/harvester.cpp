#include "mercury/harvester.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <thread>

#include <httplib.h>

#include "mercury/dublin_core.hpp"
#include "mercury/error.hpp"
#include "mercury/model.hpp"

namespace mercury {

namespace {

bool retryable(int status) { return status == 408 || status == 429 || status >= 500; }

struct Prior {
    Instant datestamp;
    bool live;
};

} // namespace

HttpResponse HttpTransport::get(const std::string& url, std::chrono::milliseconds timeout) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw TransportError("not an absolute URL: " + url);
    auto path_start = url.find('/', scheme_end + 3);
    std::string origin = url.substr(0, path_start);
    std::string target = path_start == std::string::npos ? "/" : url.substr(path_start);
    if (target.front() == '?') target.insert(0, "/");

    httplib::Client client(origin);
    client.set_url_encode(false);
    client.set_follow_location(true);
    auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
    auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
    client.set_connection_timeout(secs.count(), static_cast<time_t>(usecs.count()));
    client.set_read_timeout(secs.count(), static_cast<time_t>(usecs.count()));

    auto res = client.Get(target);
    if (!res) throw TransportError("GET " + url + " failed: " + httplib::to_string(res.error()));
    HttpResponse out;
    out.status = res->status;
    out.body = std::move(res->body);
    if (res->has_header("Retry-After")) out.retry_after = res->get_header_value("Retry-After");
    return out;
}

std::chrono::seconds backoff_schedule(int attempt) {
    if (attempt < 1) throw UsageError("attempt must be ≥ 1");
    if (attempt > 7) return kMaxBackoff;
    return std::min(std::chrono::seconds{1LL << (attempt - 1)}, kMaxBackoff);
}

std::chrono::seconds retry_delay(int attempt, const HttpResponse* response) {
    if (response && response->status == 503 && response->retry_after) {
        const auto& v = *response->retry_after;
        long long secs = 0;
        auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), secs);
        if (ec == std::errc{} && ptr == v.data() + v.size() && secs >= 0) {
            return std::min(std::chrono::seconds{secs}, kMaxRetryAfter);
        }
    }
    return backoff_schedule(attempt);
}

PageStats apply_page(Catalog& catalog, const std::vector<oai::RawRecord>& records, const ProviderConfig& provider) {
    PageStats stats;
    auto lock = catalog.writer_lock();

    // Effects of earlier records in this page, so repeats within a page
    // classify against each other.
    std::map<RecordId, Prior> overlay;
    auto prior = [&](const RecordId& id) -> std::optional<Prior> {
        if (auto it = overlay.find(id); it != overlay.end()) return it->second;
        if (auto stored = catalog.store().get(id)) return Prior{stored->datestamp, true};
        return std::nullopt;
    };

    std::vector<JournalEntry> pending;
    for (const auto& raw : records) {
        if (raw.deleted) {
            RecordId id;
            try {
                id = make_record_id(provider.provider_key, raw.identifier);
            } catch (const ValidationError& e) {
                ++stats.warnings;
                stats.messages.push_back("skipped deletion: " + std::string(e.what()));
                continue;
            }
            pending.push_back(make_tombstone(0, id, raw.datestamp, Instant{}));
            overlay[id] = Prior{raw.datestamp, false};
            ++stats.deleted;
            continue;
        }

        MetadataRecord record;
        try {
            auto draft = dc::parse_record(raw);
            stats.warnings += draft.parse_warnings.size();
            record = dc::finalize(draft, provider.provider_key);
        } catch (const Error& e) {
            ++stats.warnings;
            stats.messages.push_back("skipped '" + raw.identifier + "': " + e.what());
            continue;
        }
        auto validation = validate_record(record);
        if (!validation.ok()) {
            ++stats.warnings;
            std::string why;
            for (const auto& v : validation.violations) why += (why.empty() ? "" : "; ") + v;
            stats.messages.push_back("skipped '" + raw.identifier + "': " + why);
            continue;
        }

        auto before = prior(record.record_id);
        if (!before || !before->live) {
            ++stats.new_records;
        } else if (record.datestamp > before->datestamp) {
            ++stats.updated;
        } else {
            ++stats.unchanged;
            continue;
        }
        overlay[record.record_id] = Prior{record.datestamp, true};
        pending.push_back(JournalEntry{0, EntryKind::upsert, std::move(record), Instant{}});
    }

    catalog.commit_locked(std::move(pending));
    return stats;
}

Harvester::Harvester(Catalog& catalog, Transport& transport, Sleeper sleeper)
    : catalog_(catalog), transport_(transport), sleeper_(std::move(sleeper)) {
    if (!sleeper_) sleeper_ = [](std::chrono::seconds d) { std::this_thread::sleep_for(d); };
}

oai::Envelope Harvester::fetch(const std::string& url, const ProviderConfig& provider) {
    const auto timeout = std::chrono::milliseconds(static_cast<long long>(provider.page_timeout * 1000));
    std::string why;
    for (int attempt = 1; attempt <= kRetryBudget; ++attempt) {
        std::optional<HttpResponse> response;
        try {
            response = transport_.get(url, timeout);
        } catch (const TransportError& e) {
            why = e.what();
        }
        if (response) {
            if (response->status == 200) return oai::parse_envelope(response->body);
            if (!retryable(response->status)) {
                throw TransportError("HTTP " + std::to_string(response->status) + " from " + url);
            }
            why = "HTTP " + std::to_string(response->status) + " from " + url;
        }
        if (attempt == kRetryBudget) break;
        sleeper_(retry_delay(attempt, response ? &*response : nullptr));
    }
    throw TransportError("giving up after " + std::to_string(kRetryBudget) + " attempts: " + why);
}

Granularity Harvester::discover_granularity(const ProviderConfig& provider, HarvestReport& report) {
    try {
        auto env = fetch(oai::build_request({provider.base_url, oai::Verb::Identify, {}}), provider);
        if (const auto* info = std::get_if<oai::IdentifyInfo>(&env.payload)) return info->granularity;
    } catch (const TransportError&) {
        throw;
    } catch (const Error& e) {
        report.messages.push_back(std::string("Identify unusable, assuming day granularity: ") + e.what());
        return Granularity::day;
    }
    report.messages.emplace_back("Identify returned no repository info, assuming day granularity");
    return Granularity::day;
}

HarvestResult Harvester::harvest(const ProviderConfig& provider, const HarvestState& state, HarvestMode mode) {
    HarvestResult result{{}, state};
    HarvestReport& report = result.report;
    report.provider_key = provider.provider_key;
    result.state.provider_key = provider.provider_key;

    if (mode == HarvestMode::incremental && !state.last_success_datestamp) {
        mode = HarvestMode::full;
        ++report.warnings;
        report.messages.emplace_back("no previous successful harvest; promoted to full");
    }
    report.mode = mode;

    std::optional<Instant> max_datestamp;
    try {
        oai::Arguments initial{{"metadataPrefix", provider.metadata_prefix}};
        if (mode == HarvestMode::incremental) {
            Granularity g = discover_granularity(provider, report);
            initial.emplace_back("from", format_datestamp(*state.last_success_datestamp, g));
        }
        if (provider.set) initial.emplace_back("set", *provider.set);
        const std::string first_url = oai::build_request({provider.base_url, oai::Verb::ListRecords, initial});

        bool restarted = false;
        std::string url = first_url;
        bool first_page = true;
        for (;;) {
            auto env = fetch(url, provider);
            if (const auto* err = std::get_if<oai::OaiError>(&env.payload)) {
                if (err->code == oai::ErrorCode::noRecordsMatch && first_page) break;
                if (err->code == oai::ErrorCode::badResumptionToken && !first_page && !restarted) {
                    restarted = true;
                    report.messages.emplace_back("resumption token rejected; restarting the listing once");
                    url = first_url;
                    first_page = true;
                    continue;
                }
                throw StructureError("OAI-PMH error " + std::string(oai::error_code_name(err->code)) +
                                     (err->message.empty() ? "" : ": " + err->message));
            }
            const auto* list = std::get_if<oai::RecordList>(&env.payload);
            if (!list) throw StructureError("ListRecords answered with a different payload");

            PageStats page = apply_page(catalog_, list->records, provider);
            ++report.pages;
            report.new_records += page.new_records;
            report.updated += page.updated;
            report.unchanged += page.unchanged;
            report.deleted += page.deleted;
            report.warnings += page.warnings;
            report.messages.insert(report.messages.end(), page.messages.begin(), page.messages.end());
            for (const auto& r : list->records) {
                if (!max_datestamp || r.datestamp > *max_datestamp) max_datestamp = r.datestamp;
            }

            auto token = oai::next_page(env);
            if (!token) break;
            url = oai::build_request({provider.base_url, oai::Verb::ListRecords, {{"resumptionToken", token->token}}});
            first_page = false;
        }
    } catch (const Error& e) {
        report.error = e.what();
    }

    result.state.last_run_at = now_utc();
    if (report.error) {
        result.state.last_run_outcome = HarvestOutcome::failed;
    } else {
        result.state.last_run_outcome = HarvestOutcome::success;
        if (max_datestamp &&
            (!result.state.last_success_datestamp || *max_datestamp > *result.state.last_success_datestamp)) {
            result.state.last_success_datestamp = max_datestamp;
        }
    }
    return result;
}

HarvestReport Harvester::run(const ProviderConfig& provider, HarvestMode mode) {
    auto guard = begin(provider.provider_key);
    auto result = harvest(provider, catalog_.store().state(provider.provider_key), mode);
    catalog_.store().save_state(result.state);
    return result.report;
}

Harvester::Guard Harvester::begin(const std::string& provider_key) {
    std::lock_guard lock(running_mutex_);
    if (!running_.insert(provider_key).second) throw HarvestInProgress(provider_key);
    return Guard(this, provider_key);
}

bool Harvester::busy(const std::string& provider_key) const {
    std::lock_guard lock(running_mutex_);
    return running_.count(provider_key) != 0;
}

Harvester::Guard::Guard(Guard&& other) noexcept : owner_(other.owner_), key_(std::move(other.key_)) {
    other.owner_ = nullptr;
}

Harvester::Guard::~Guard() {
    if (!owner_) return;
    std::lock_guard lock(owner_->running_mutex_);
    owner_->running_.erase(key_);
}

} // namespace mercury
