#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "mercury/time.hpp"

namespace mercury {

struct ProviderConfig {
    std::string provider_key;
    std::string base_url;
    std::string metadata_prefix = "oai_dc";
    std::optional<std::string> set;
    /// Seconds allowed for one page request.
    double page_timeout = 30;

    friend bool operator==(const ProviderConfig&, const ProviderConfig&) = default;
};

enum class HarvestOutcome { never_run, success, failed };

struct HarvestState {
    std::string provider_key;
    /// Max record datestamp of the last fully successful harvest.
    std::optional<Instant> last_success_datestamp;
    std::optional<Instant> last_run_at;
    HarvestOutcome last_run_outcome = HarvestOutcome::never_run;

    friend bool operator==(const HarvestState&, const HarvestState&) = default;
};

enum class HarvestMode { full, incremental };

struct HarvestReport {
    std::string provider_key;
    HarvestMode mode = HarvestMode::full;
    std::size_t pages = 0;
    std::size_t new_records = 0;
    std::size_t updated = 0;
    std::size_t unchanged = 0;
    std::size_t deleted = 0;
    std::size_t warnings = 0;
    std::optional<std::string> error;
    /// Human-readable notes (mode promotion, listing restarts, skipped records).
    std::vector<std::string> messages;

    std::size_t processed() const noexcept { return new_records + updated + unchanged + deleted; }
};

/// http:// or https:// with a nonempty host and no whitespace.
bool is_valid_http_url(std::string_view url);

/// Throws ValidationError describing the first bad field.
void validate_provider(const ProviderConfig& config);

std::string_view outcome_name(HarvestOutcome outcome);
std::string_view mode_name(HarvestMode mode);
std::optional<HarvestMode> mode_from_name(std::string_view name);

nlohmann::json to_json(const ProviderConfig& config);
nlohmann::json to_json(const HarvestState& state);
nlohmann::json to_json(const HarvestReport& report);

/// Applies defaults for absent optional fields and validates. Throws
/// ValidationError.
ProviderConfig provider_from_json(const nlohmann::json& j);
HarvestState state_from_json(const nlohmann::json& j);

} // namespace mercury
