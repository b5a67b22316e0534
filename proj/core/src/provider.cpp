#include "mercury/provider.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "mercury/error.hpp"
#include "mercury/model.hpp"

namespace mercury {

bool is_valid_http_url(std::string_view url) {
    std::size_t scheme = 0;
    if (url.rfind("http://", 0) == 0) {
        scheme = 7;
    } else if (url.rfind("https://", 0) == 0) {
        scheme = 8;
    } else {
        return false;
    }
    if (std::any_of(url.begin(), url.end(), [](unsigned char c) { return std::isspace(c) || std::iscntrl(c); })) {
        return false;
    }
    auto rest = url.substr(scheme);
    auto host_end = rest.find_first_of("/?#");
    auto authority = rest.substr(0, host_end);
    if (auto at = authority.rfind('@'); at != std::string_view::npos) authority = authority.substr(at + 1);
    std::string_view host = authority;
    if (!host.empty() && host.front() == '[') {
        auto close = host.find(']');
        if (close == std::string_view::npos) return false;
        host = host.substr(1, close - 1);
    } else if (auto colon = host.rfind(':'); colon != std::string_view::npos) {
        auto port = host.substr(colon + 1);
        if (port.empty() || port.size() > 5 ||
            !std::all_of(port.begin(), port.end(), [](unsigned char c) { return std::isdigit(c); })) {
            return false;
        }
        host = host.substr(0, colon);
    }
    return !host.empty();
}

void validate_provider(const ProviderConfig& c) {
    if (!is_valid_provider_key(c.provider_key)) {
        throw ValidationError("provider_key '" + c.provider_key + "' does not match [a-z0-9_-]+");
    }
    if (!is_valid_http_url(c.base_url)) throw ValidationError("base_url '" + c.base_url + "' is not an http(s) URL");
    if (trim(c.metadata_prefix).empty()) throw ValidationError("metadata_prefix must be nonempty");
    if (c.set && trim(*c.set).empty()) throw ValidationError("set must be nonempty when present");
    if (!std::isfinite(c.page_timeout) || c.page_timeout <= 0) throw ValidationError("page_timeout must be positive");
}

std::string_view outcome_name(HarvestOutcome o) {
    switch (o) {
        case HarvestOutcome::never_run: return "never_run";
        case HarvestOutcome::success: return "success";
        case HarvestOutcome::failed: return "failed";
    }
    return "never_run";
}

std::string_view mode_name(HarvestMode m) { return m == HarvestMode::full ? "full" : "incremental"; }

std::optional<HarvestMode> mode_from_name(std::string_view name) {
    if (name == "full") return HarvestMode::full;
    if (name == "incremental") return HarvestMode::incremental;
    return std::nullopt;
}

nlohmann::json to_json(const ProviderConfig& c) {
    nlohmann::json j{{"provider_key", c.provider_key},
                     {"base_url", c.base_url},
                     {"metadata_prefix", c.metadata_prefix},
                     {"page_timeout", c.page_timeout}};
    if (c.set) j["set"] = *c.set;
    return j;
}

nlohmann::json to_json(const HarvestState& s) {
    nlohmann::json j{{"provider_key", s.provider_key}, {"last_run_outcome", outcome_name(s.last_run_outcome)}};
    if (s.last_success_datestamp) j["last_success_datestamp"] = format_rfc3339(*s.last_success_datestamp);
    if (s.last_run_at) j["last_run_at"] = format_rfc3339(*s.last_run_at);
    return j;
}

nlohmann::json to_json(const HarvestReport& r) {
    nlohmann::json j{{"provider_key", r.provider_key}, {"mode", mode_name(r.mode)},
                     {"pages", r.pages},               {"new", r.new_records},
                     {"updated", r.updated},           {"unchanged", r.unchanged},
                     {"deleted", r.deleted},           {"warnings", r.warnings},
                     {"messages", r.messages}};
    if (r.error) j["error"] = *r.error;
    return j;
}

ProviderConfig provider_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ValidationError("provider config must be a JSON object");
    auto text = [&](const char* name) -> std::optional<std::string> {
        auto it = j.find(name);
        if (it == j.end() || it->is_null()) return std::nullopt;
        if (!it->is_string()) throw ValidationError(std::string("field '") + name + "' must be a string");
        return it->get<std::string>();
    };
    ProviderConfig c;
    auto key = text("provider_key");
    auto url = text("base_url");
    if (!key) throw ValidationError("missing field 'provider_key'");
    if (!url) throw ValidationError("missing field 'base_url'");
    c.provider_key = *key;
    c.base_url = *url;
    if (auto p = text("metadata_prefix")) c.metadata_prefix = *p;
    c.set = text("set");
    if (auto it = j.find("page_timeout"); it != j.end() && !it->is_null()) {
        if (!it->is_number()) throw ValidationError("field 'page_timeout' must be a number");
        c.page_timeout = it->get<double>();
    }
    validate_provider(c);
    return c;
}

HarvestState state_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ValidationError("harvest state must be a JSON object");
    HarvestState s;
    s.provider_key = j.value("provider_key", std::string{});
    auto instant = [&](const char* name) -> std::optional<Instant> {
        auto it = j.find(name);
        if (it == j.end() || it->is_null()) return std::nullopt;
        if (!it->is_string()) throw ValidationError(std::string("field '") + name + "' must be a string");
        return parse_rfc3339(it->get<std::string>());
    };
    s.last_success_datestamp = instant("last_success_datestamp");
    s.last_run_at = instant("last_run_at");
    auto outcome = j.value("last_run_outcome", std::string("never_run"));
    if (outcome == "success") {
        s.last_run_outcome = HarvestOutcome::success;
    } else if (outcome == "failed") {
        s.last_run_outcome = HarvestOutcome::failed;
    } else if (outcome == "never_run") {
        s.last_run_outcome = HarvestOutcome::never_run;
    } else {
        throw ValidationError("unknown last_run_outcome '" + outcome + "'");
    }
    return s;
}

} // namespace mercury
