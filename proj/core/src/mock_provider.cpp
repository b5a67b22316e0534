#include "mercury/mock_provider.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <httplib.h>

#include "mercury/dublin_core.hpp"
#include "mercury/error.hpp"
#include "mercury/xml.hpp"

namespace mercury::mock {

namespace {

using nlohmann::json;

constexpr std::string_view kXsi = "http://www.w3.org/2001/XMLSchema-instance";

std::string filter_hash(const std::string& text) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::vector<std::string> string_list(const json& j, const char* key) {
    std::vector<std::string> out;
    if (auto it = j.find(key); it != j.end()) {
        if (!it->is_array()) throw ValidationError(std::string("corpus: '") + key + "' must be an array");
        for (const auto& v : *it) out.push_back(v.get<std::string>());
    }
    return out;
}

DcPayload payload_from_json(const json& j) {
    DcPayload p;
    p.title = j.value("title", "");
    p.descriptions = string_list(j, "descriptions");
    p.subjects = string_list(j, "subjects");
    p.coverage = string_list(j, "coverage");
    p.sources = string_list(j, "sources");
    p.identifiers = string_list(j, "identifiers");
    if (auto it = j.find("attributes"); it != j.end()) {
        for (const auto& a : *it) p.attributes.push_back(attribute_from_json(a));
    }
    p.lineage = j.value("lineage", "");
    return p;
}

oai::OaiError oai_error(oai::ErrorCode code, std::string message) { return {code, std::move(message)}; }

struct Page {
    std::size_t offset = 0;
    std::string hash;
};

std::optional<Page> parse_token(const std::string& token) {
    auto colon = token.find(':');
    if (colon == std::string::npos || colon == 0) return std::nullopt;
    Page page;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + colon, page.offset);
    if (ec != std::errc{} || ptr != token.data() + colon) return std::nullopt;
    page.hash = token.substr(colon + 1);
    if (page.hash.empty()) return std::nullopt;
    return page;
}

} // namespace

std::string render_payload(const DcPayload& p) {
    xml::Writer w;
    w.open("oai_dc:dc", {{"xmlns:oai_dc", std::string(oai::kOaiDcNamespace)},
                         {"xmlns:dc", std::string(oai::kDcNamespace)},
                         {"xmlns:mh", std::string(dc::kExtensionNamespace)},
                         {"xmlns:xsi", std::string(kXsi)},
                         {"xsi:schemaLocation",
                          "http://www.openarchives.org/OAI/2.0/oai_dc/ "
                          "http://www.openarchives.org/OAI/2.0/oai_dc.xsd"}});
    if (!p.title.empty()) w.leaf("dc:title", p.title);
    for (const auto& d : p.descriptions) w.leaf("dc:description", d);
    for (const auto& s : p.subjects) w.leaf("dc:subject", s);
    for (const auto& c : p.coverage) w.leaf("dc:coverage", c);
    for (const auto& s : p.sources) w.leaf("dc:source", s);
    for (const auto& i : p.identifiers) w.leaf("dc:identifier", i);
    for (const auto& a : p.attributes) {
        w.open("mh:attribute");
        w.leaf("mh:name", a.name);
        if (!a.unit.empty()) w.leaf("mh:unit", a.unit);
        if (a.precision) w.leaf("mh:precision", *a.precision);
        if (a.accuracy) w.leaf("mh:accuracy", *a.accuracy);
        w.close();
    }
    if (!p.lineage.empty()) w.leaf("mh:lineage", p.lineage);
    w.close();
    return w.take();
}

void validate_corpus(const MockCorpus& corpus) {
    if (corpus.page_size == 0) throw ValidationError("corpus: page_size must be positive");
    std::set<std::string> seen;
    for (const auto& r : corpus.records) {
        if (r.identifier.empty()) throw ValidationError("corpus: empty record identifier");
        if (!seen.insert(r.identifier).second) throw ValidationError("corpus: duplicate identifier '" + r.identifier + "'");
        if (corpus.granularity == Granularity::day && start_of_day(r.datestamp) != r.datestamp) {
            throw ValidationError("corpus: datestamp of '" + r.identifier + "' is finer than day granularity");
        }
        if (!r.deleted && r.metadata_xml.empty()) {
            throw ValidationError("corpus: record '" + r.identifier + "' has no metadata");
        }
    }
}

MockCorpus corpus_from_json(const json& j) {
    try {
        MockCorpus c;
        c.repository_name = j.value("repository_name", c.repository_name);
        c.base_url = j.value("base_url", c.base_url);
        c.page_size = j.value("page_size", c.page_size);
        if (auto it = j.find("granularity"); it != j.end()) {
            auto g = granularity_from_name(it->get<std::string>());
            if (!g) throw ValidationError("corpus: unknown granularity '" + it->get<std::string>() + "'");
            c.granularity = *g;
        }
        if (auto it = j.find("fault_plan"); it != j.end()) {
            if (it->contains("fail_page_once_with_503")) {
                c.fault_plan.fail_page_once_503 = (*it)["fail_page_once_with_503"].get<std::size_t>();
            }
            c.fault_plan.retry_after_seconds = it->value("retry_after_seconds", c.fault_plan.retry_after_seconds);
            if (it->contains("expire_token_after_pages")) {
                c.fault_plan.expire_token_after_pages = (*it)["expire_token_after_pages"].get<std::size_t>();
            }
        }
        for (const auto& rj : j.at("records")) {
            MockRecord r;
            r.identifier = rj.at("identifier").get<std::string>();
            r.datestamp = parse_datestamp(rj.at("datestamp").get<std::string>()).instant;
            r.deleted = rj.value("deleted", false);
            r.sets = string_list(rj, "sets");
            if (!r.deleted) {
                if (auto it = rj.find("metadata_xml"); it != rj.end()) {
                    r.metadata_xml = it->get<std::string>();
                } else {
                    r.metadata_xml = render_payload(payload_from_json(rj.at("metadata")));
                }
            }
            c.records.push_back(std::move(r));
        }
        validate_corpus(c);
        return c;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("corpus: ") + e.what());
    }
}

json to_json(const MockCorpus& c) {
    json j;
    j["repository_name"] = c.repository_name;
    j["base_url"] = c.base_url;
    j["page_size"] = c.page_size;
    j["granularity"] = std::string(granularity_name(c.granularity));
    json fault = json::object();
    if (c.fault_plan.fail_page_once_503) fault["fail_page_once_with_503"] = *c.fault_plan.fail_page_once_503;
    if (c.fault_plan.expire_token_after_pages) fault["expire_token_after_pages"] = *c.fault_plan.expire_token_after_pages;
    if (!fault.empty()) {
        fault["retry_after_seconds"] = c.fault_plan.retry_after_seconds;
        j["fault_plan"] = fault;
    }
    json records = json::array();
    for (const auto& r : c.records) {
        json rj;
        rj["identifier"] = r.identifier;
        rj["datestamp"] = format_datestamp(r.datestamp, c.granularity);
        if (r.deleted) rj["deleted"] = true;
        if (!r.sets.empty()) rj["sets"] = r.sets;
        if (!r.deleted) rj["metadata_xml"] = r.metadata_xml;
        records.push_back(std::move(rj));
    }
    j["records"] = std::move(records);
    return j;
}

MockCorpus load_corpus(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open corpus file " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ValidationError("corpus " + path.string() + ": " + e.what());
    }
    return corpus_from_json(j);
}

namespace {

struct Region {
    const char* name;
    double west, south, east, north;
};

// A few real places; the last two cross the antimeridian.
constexpr Region kRegions[] = {
    {"Sevilleta", -107.0, 34.2, -106.5, 34.5},
    {"Konza Prairie", -96.6, 39.05, -96.55, 39.12},
    {"Harvard Forest", -72.25, 42.45, -72.15, 42.55},
    {"Bonanza Creek", -148.4, 64.6, -147.8, 64.9},
    {"Coweeta", -83.5, 35.0, -83.4, 35.1},
    {"Niwot Ridge", -105.6, 40.0, -105.5, 40.1},
    {"Moorea", -149.95, -17.6, -149.75, -17.45},
    {"North Temperate Lakes", -89.8, 45.9, -89.4, 46.2},
    {"Bering Strait", 168.0, 64.0, -166.0, 67.0},
    {"Fiji reef transect", 177.0, -19.0, -179.5, -16.0},
};

constexpr const char* kSubjects[] = {
    "phytoplankton", "soil respiration", "net primary production", "nitrogen deposition", "stream chemistry",
    "small mammals", "grassland", "permafrost", "coral reef", "canopy", "lake ice", "carbon flux",
    "precipitation", "fire history", "bird census", "invertebrates", "snowpack", "dissolved organic carbon",
};

constexpr const char* kStudies[] = {
    "Long-term monitoring of", "Seasonal survey of", "Experimental manipulation of", "Spatial patterns in",
    "Interannual variability of", "Baseline inventory of",
};

struct Measure {
    const char* name;
    const char* unit;
    const char* precision;
    const char* accuracy;
};

constexpr Measure kMeasures[] = {
    {"air temperature", "degC", "0.1", "±0.5 °C"},
    {"soil moisture", "m3/m3", "0.01", "5%"},
    {"chlorophyll a", "ug/L", "0.01", nullptr},
    {"species count", "count", nullptr, nullptr},
    {"biomass", "g/m2", "0.1", "10%"},
    {"water temperature", "degC", "0.01", "±0.2 °C"},
    {"CO2 flux", "umol/m2/s", "0.001", nullptr},
};

constexpr const char* kLineage[] = {
    "Field samples processed at the site laboratory and quality checked annually.",
    "Sensor data logged every 30 minutes; gaps filled by linear interpolation.",
    "Plots resurveyed by the same crew each season following the site protocol.",
    "Digitized from archived field notebooks and cross-checked against originals.",
};

template <class T, std::size_t N>
const T& pick(std::mt19937_64& rng, const T (&items)[N]) {
    return items[std::uniform_int_distribution<std::size_t>(0, N - 1)(rng)];
}

std::string fmt_degrees(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

} // namespace

MockCorpus generate_corpus(std::uint64_t seed, const GeneratorOptions& options) {
    std::mt19937_64 rng(seed);
    MockCorpus corpus;
    corpus.repository_name = "Mercury mock provider (seed " + std::to_string(seed) + ")";
    corpus.page_size = options.page_size;
    corpus.granularity = options.granularity;

    const bool day = options.granularity == Granularity::day;
    Instant stamp = day ? start_of_day(options.first_datestamp) : options.first_datestamp;
    for (std::size_t i = 0; i < options.records; ++i) {
        MockRecord r;
        char id[64];
        std::snprintf(id, sizeof id, "oai:mock.example.org:dataset/%04zu", i + 1);
        r.identifier = id;
        // Roughly one in six records shares its predecessor's datestamp.
        if (i > 0 && std::uniform_int_distribution<int>(0, 5)(rng) != 0) {
            stamp += day ? std::chrono::seconds{86400} * std::uniform_int_distribution<int>(1, 3)(rng)
                         : std::chrono::seconds{std::uniform_int_distribution<int>(60, 3 * 3600)(rng)};
        }
        r.datestamp = stamp;
        r.deleted = i < options.deleted;
        if (!r.deleted) {
            DcPayload p;
            const char* subject = pick(rng, kSubjects);
            const Region& region = pick(rng, kRegions);
            p.title = std::string(pick(rng, kStudies)) + " " + subject + " at " + region.name;
            p.descriptions.push_back("Data collected at " + std::string(region.name) + " to study " + subject +
                                     " and related processes.");
            if (std::uniform_int_distribution<int>(0, 2)(rng) == 0) {
                p.descriptions.emplace_back("Methods follow the network's standard protocol.");
            }
            p.subjects.emplace_back(subject);
            int extra = std::uniform_int_distribution<int>(0, 3)(rng);
            for (int k = 0; k < extra; ++k) p.subjects.emplace_back(pick(rng, kSubjects));
            p.coverage.push_back("westlimit=" + fmt_degrees(region.west) + "; southlimit=" + fmt_degrees(region.south) +
                                 "; eastlimit=" + fmt_degrees(region.east) +
                                 "; northlimit=" + fmt_degrees(region.north));
            int start_year = std::uniform_int_distribution<int>(1980, 2015)(rng);
            int span = std::uniform_int_distribution<int>(0, 8)(rng);
            p.coverage.push_back("start=" + std::to_string(start_year) + "-01-01; end=" +
                                 std::to_string(start_year + span) + "-12-31");
            char url[96];
            std::snprintf(url, sizeof url, "https://data.mock.example.org/datasets/%04zu", i + 1);
            p.identifiers.emplace_back(url);
            int measures = std::uniform_int_distribution<int>(1, 3)(rng);
            for (int k = 0; k < measures; ++k) {
                const Measure& m = pick(rng, kMeasures);
                bool seen = std::any_of(p.attributes.begin(), p.attributes.end(),
                                        [&](const Attribute& x) { return x.name == m.name; });
                if (seen) continue;
                Attribute a{m.name, m.unit, std::nullopt, std::nullopt};
                if (m.precision) a.precision = m.precision;
                if (m.accuracy) a.accuracy = m.accuracy;
                p.attributes.push_back(std::move(a));
            }
            p.lineage = pick(rng, kLineage);
            r.metadata_xml = render_payload(p);
        }
        corpus.records.push_back(std::move(r));
    }
    return corpus;
}

MockProvider::MockProvider(MockCorpus corpus, Clock clock) : clock_(std::move(clock)) {
    if (!clock_) clock_ = now_utc;
    validate_corpus(corpus);
    corpus_ = std::make_shared<const MockCorpus>(std::move(corpus));
}

void MockProvider::replace_corpus(MockCorpus corpus) {
    validate_corpus(corpus);
    auto next = std::make_shared<const MockCorpus>(std::move(corpus));
    std::lock_guard lock(mutex_);
    corpus_ = std::move(next);
}

std::shared_ptr<const MockCorpus> MockProvider::corpus() const {
    std::lock_guard lock(mutex_);
    return corpus_;
}

HttpResponse MockProvider::render(const MockCorpus& corpus, oai::Envelope env, bool echo_arguments) {
    env.response_date = clock_();
    env.request_echo = corpus.base_url;
    if (!echo_arguments) env.request_arguments.clear();
    return {200, oai::write_envelope(env, corpus.granularity), std::nullopt};
}

HttpResponse MockProvider::handle(const oai::Arguments& params) {
    auto corpus = this->corpus();
    oai::Envelope env;
    env.request_arguments = params;

    std::optional<oai::Verb> verb;
    oai::Arguments args;
    int verbs = 0;
    for (const auto& [name, value] : params) {
        if (name == "verb") {
            ++verbs;
            verb = oai::verb_from_name(value);
        } else {
            args.emplace_back(name, value);
        }
    }
    if (verbs != 1 || !verb) {
        env.payload = oai_error(oai::ErrorCode::badVerb, verbs > 1 ? "verb repeated" : "missing or unknown verb");
        return render(*corpus, std::move(env), false);
    }

    // Argument legality is the same rule set the client enforces.
    try {
        oai::build_request({corpus->base_url, *verb, args});
    } catch (const ProtocolUsageError& e) {
        env.payload = oai_error(oai::ErrorCode::badArgument, e.what());
        return render(*corpus, std::move(env), false);
    }

    auto arg = [&](std::string_view name) -> std::optional<std::string> {
        for (const auto& [n, v] : args) {
            if (n == name) return v;
        }
        return std::nullopt;
    };
    auto find = [&](const std::string& identifier) -> const MockRecord* {
        for (const auto& r : corpus->records) {
            if (r.identifier == identifier) return &r;
        }
        return nullptr;
    };

    switch (*verb) {
    case oai::Verb::Identify: {
        oai::IdentifyInfo info;
        info.repository_name = corpus->repository_name;
        info.base_url = corpus->base_url;
        info.protocol_version = "2.0";
        info.admin_emails = {"admin@mock.example.org"};
        Instant earliest = corpus->records.empty() ? Instant{} : corpus->records.front().datestamp;
        for (const auto& r : corpus->records) earliest = std::min(earliest, r.datestamp);
        info.earliest_datestamp = format_datestamp(earliest, corpus->granularity);
        info.deleted_record = "persistent";
        info.granularity = corpus->granularity;
        env.payload = std::move(info);
        break;
    }
    case oai::Verb::ListMetadataFormats:
        if (auto id = arg("identifier"); id && !find(*id)) {
            env.payload = oai_error(oai::ErrorCode::idDoesNotExist, "unknown identifier");
        } else {
            env.payload = oai::FormatList{{{"oai_dc", "http://www.openarchives.org/OAI/2.0/oai_dc.xsd",
                                            std::string(oai::kOaiDcNamespace)}}};
        }
        break;
    case oai::Verb::ListSets:
        if (arg("resumptionToken")) {
            env.payload = oai_error(oai::ErrorCode::badResumptionToken, "this repository issues no set tokens");
        } else {
            env.payload = oai_error(oai::ErrorCode::noSetHierarchy, "this repository does not support sets");
        }
        break;
    case oai::Verb::GetRecord: {
        const MockRecord* r = find(*arg("identifier"));
        if (!r) {
            env.payload = oai_error(oai::ErrorCode::idDoesNotExist, "unknown identifier");
        } else if (*arg("metadataPrefix") != "oai_dc") {
            env.payload = oai_error(oai::ErrorCode::cannotDisseminateFormat, "only oai_dc is available");
        } else {
            oai::RawRecord raw{r->identifier, r->datestamp, r->sets, r->deleted, std::nullopt};
            if (!r->deleted) raw.metadata_xml = r->metadata_xml;
            env.payload = oai::SingleRecord{std::move(raw)};
        }
        break;
    }
    case oai::Verb::ListIdentifiers:
    case oai::Verb::ListRecords:
        return list(*corpus, *verb, args);
    }
    return render(*corpus, std::move(env), true);
}

HttpResponse MockProvider::list(const MockCorpus& corpus, oai::Verb verb, const oai::Arguments& args) {
    oai::Envelope env;
    env.request_arguments = {{"verb", std::string(oai::verb_name(verb))}};
    env.request_arguments.insert(env.request_arguments.end(), args.begin(), args.end());
    auto fail = [&](oai::ErrorCode code, std::string message) {
        env.payload = oai_error(code, std::move(message));
        return render(corpus, std::move(env), code != oai::ErrorCode::badArgument);
    };

    std::optional<std::string> token, prefix, from, until, set;
    for (const auto& [n, v] : args) {
        if (n == "resumptionToken") token = v;
        if (n == "metadataPrefix") prefix = v;
        if (n == "from") from = v;
        if (n == "until") until = v;
        if (n == "set") set = v;
    }

    Filter filter{verb, std::nullopt, std::nullopt};
    std::size_t offset = 0;
    std::string hash;
    if (token) {
        auto page = parse_token(*token);
        std::optional<Filter> known;
        if (page) {
            std::lock_guard lock(mutex_);
            if (auto it = issued_.find(page->hash); it != issued_.end() && it->second.verb == verb) known = it->second;
        }
        if (!page || !known || page->offset % corpus.page_size != 0) {
            return fail(oai::ErrorCode::badResumptionToken, "unknown or malformed resumption token");
        }
        const std::size_t page_number = page->offset / corpus.page_size + 1;
        const auto& expire = corpus.fault_plan.expire_token_after_pages;
        if (expire && page_number == *expire + 1 && !expired_token_.exchange(true)) {
            return fail(oai::ErrorCode::badResumptionToken, "resumption token expired");
        }
        filter = *known;
        offset = page->offset;
        hash = page->hash;
    } else {
        if (*prefix != "oai_dc") return fail(oai::ErrorCode::cannotDisseminateFormat, "only oai_dc is available");
        if (set) return fail(oai::ErrorCode::noSetHierarchy, "this repository does not support sets");
        for (const auto* bound : {&from, &until}) {
            if (*bound && corpus.granularity == Granularity::day &&
                parse_datestamp(**bound).granularity == Granularity::seconds) {
                return fail(oai::ErrorCode::badArgument, "repository granularity is YYYY-MM-DD");
            }
        }
        if (from) filter.from = parse_datestamp(*from).instant;
        if (until) {
            auto u = parse_datestamp(*until);
            filter.until = u.granularity == Granularity::day ? end_of_day(u.instant) : u.instant;
        }
        std::string key = std::string(oai::verb_name(verb)) + "|" + from.value_or("") + "|" + until.value_or("");
        hash = filter_hash(key);
        std::lock_guard lock(mutex_);
        issued_.emplace(hash, filter);
    }

    std::vector<const MockRecord*> matches;
    for (const auto& r : corpus.records) {
        if (filter.from && r.datestamp < *filter.from) continue;
        if (filter.until && r.datestamp > *filter.until) continue;
        matches.push_back(&r);
    }
    if (matches.empty() && !token) return fail(oai::ErrorCode::noRecordsMatch, "no records match the request");
    if (token && offset >= matches.size()) {
        return fail(oai::ErrorCode::badResumptionToken, "resumption token past the end of the list");
    }

    const std::size_t page_number = offset / corpus.page_size + 1;
    const auto& fail_page = corpus.fault_plan.fail_page_once_503;
    if (fail_page && page_number == *fail_page && !failed_page_.exchange(true)) {
        return {503, "Service temporarily unavailable\n", std::to_string(corpus.fault_plan.retry_after_seconds)};
    }

    const std::size_t end = std::min(matches.size(), offset + corpus.page_size);
    if (verb == oai::Verb::ListRecords) {
        oai::RecordList list;
        for (std::size_t i = offset; i < end; ++i) {
            const auto& r = *matches[i];
            oai::RawRecord raw{r.identifier, r.datestamp, r.sets, r.deleted, std::nullopt};
            if (!r.deleted) raw.metadata_xml = r.metadata_xml;
            list.records.push_back(std::move(raw));
        }
        env.payload = std::move(list);
    } else {
        oai::HeaderList list;
        for (std::size_t i = offset; i < end; ++i) {
            const auto& r = *matches[i];
            list.headers.push_back({r.identifier, r.datestamp, r.sets, r.deleted});
        }
        env.payload = std::move(list);
    }
    if (end < matches.size()) {
        env.resumption = oai::ResumptionToken{std::to_string(end) + ":" + hash, matches.size(), offset};
    }
    return render(corpus, std::move(env), true);
}

MockServer::MockServer(std::shared_ptr<MockProvider> provider)
    : provider_(std::move(provider)), server_(std::make_unique<httplib::Server>()) {
    install_routes();
}

MockServer::~MockServer() { stop(); }

void MockServer::install_routes() {
    server_->Get(".*", [this](const httplib::Request& req, httplib::Response& res) {
        oai::Arguments params;
        for (const auto& [name, value] : req.params) params.emplace_back(name, value);
        auto out = provider_->handle(params);
        res.status = out.status;
        if (out.retry_after) res.set_header("Retry-After", *out.retry_after);
        res.set_content(out.body, out.status == 200 ? "text/xml; charset=utf-8" : "text/plain");
    });
}

int MockServer::start(const std::string& host, int port) {
    if (port == 0) {
        port_ = server_->bind_to_any_port(host);
    } else {
        port_ = server_->bind_to_port(host, port) ? port : -1;
    }
    if (port_ < 0) throw Error("cannot bind " + host + ":" + std::to_string(port));
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
    return port_;
}

void MockServer::listen_blocking(const std::string& host, int port) {
    if (!server_->bind_to_port(host, port)) throw Error("cannot bind " + host + ":" + std::to_string(port));
    port_ = port;
    server_->listen_after_bind();
}

void MockServer::stop() {
    server_->stop();
    if (thread_.joinable()) thread_.join();
}

} // namespace mercury::mock
