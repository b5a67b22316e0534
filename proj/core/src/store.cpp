#include "mercury/store.hpp"

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <boost/crc.hpp>

#include "mercury/error.hpp"

namespace mercury {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kCrcPrefix = ",\"crc\":\"";
constexpr std::size_t kCrcSuffixLength = kCrcPrefix.size() + 8 + 2;

[[noreturn]] void io_failure(const std::string& what, const fs::path& path) {
    throw StoreError(what + " '" + path.string() + "': " + std::strerror(errno));
}

std::string_view kind_name(EntryKind k) { return k == EntryKind::upsert ? "upsert" : "tombstone"; }

std::string dump(const nlohmann::json& j) {
    return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

void write_all(int fd, std::string_view data, const fs::path& path) {
    while (!data.empty()) {
        ssize_t n = ::write(fd, data.data(), data.size());
        if (n < 0) {
            if (errno == EINTR) continue;
            io_failure("write failed", path);
        }
        data.remove_prefix(static_cast<std::size_t>(n));
    }
}

std::string read_all(int fd, const fs::path& path) {
    std::string out;
    char buf[1 << 16];
    off_t offset = 0;
    for (;;) {
        ssize_t n = ::pread(fd, buf, sizeof buf, offset);
        if (n < 0) {
            if (errno == EINTR) continue;
            io_failure("read failed", path);
        }
        if (n == 0) break;
        out.append(buf, static_cast<std::size_t>(n));
        offset += n;
    }
    return out;
}

void sync_directory(const fs::path& dir) {
    int fd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY | O_CLOEXEC);
    if (fd < 0) return;
    ::fsync(fd);
    ::close(fd);
}

// Best-effort seq extraction from a damaged line, for error messages.
std::optional<std::uint64_t> sniff_seq(std::string_view line) {
    auto pos = line.find("\"seq\":");
    if (pos == std::string_view::npos) return std::nullopt;
    pos += 6;
    std::uint64_t v = 0;
    bool any = false;
    while (pos < line.size() && line[pos] >= '0' && line[pos] <= '9') {
        v = v * 10 + static_cast<std::uint64_t>(line[pos] - '0');
        ++pos;
        any = true;
    }
    return any ? std::optional(v) : std::nullopt;
}

struct ScanResult {
    std::vector<JournalEntry> entries;
    std::size_t valid_bytes = 0;
};

// Validates a whole journal image. Only the final line may be torn or
// corrupt; it is excluded from the result instead of failing.
ScanResult scan(std::string_view data, const Journal::Visitor& visit, bool keep) {
    ScanResult out;
    std::uint64_t last = 0;
    std::size_t pos = 0;
    while (pos < data.size()) {
        auto nl = data.find('\n', pos);
        if (nl == std::string_view::npos) break;  // torn tail
        auto line = data.substr(pos, nl - pos);
        bool final_line = nl + 1 == data.size();
        auto entry = decode_line(line);
        if (!entry) {
            if (final_line) break;
            throw IntegrityError(sniff_seq(line).value_or(last + 1), "checksum or format mismatch");
        }
        if (entry->seq != last + 1) {
            throw IntegrityError(entry->seq, "expected seq " + std::to_string(last + 1));
        }
        last = entry->seq;
        if (visit) visit(*entry);
        if (keep) out.entries.push_back(std::move(*entry));
        pos = nl + 1;
        out.valid_bytes = pos;
    }
    return out;
}

} // namespace

std::uint32_t crc32c(std::string_view bytes) {
    boost::crc_optimal<32, 0x1EDC6F41, 0xFFFFFFFF, 0xFFFFFFFF, true, true> crc;
    crc.process_bytes(bytes.data(), bytes.size());
    return crc.checksum();
}

JournalEntry make_tombstone(std::uint64_t seq, const RecordId& id, Instant datestamp, Instant written_at) {
    JournalEntry e;
    e.seq = seq;
    e.kind = EntryKind::tombstone;
    e.record.record_id = id;
    e.record.datestamp = datestamp;
    e.record.deleted = true;
    e.written_at = written_at;
    return e;
}

void fold(LiveSet& live, const JournalEntry& entry) {
    const RecordId& id = entry.record.record_id;
    if (entry.kind == EntryKind::tombstone) {
        live.erase(id);
        return;
    }
    auto it = live.find(id);
    if (it == live.end()) {
        live.emplace(id, entry.record);
    } else if (entry.record.datestamp >= it->second.datestamp) {
        it->second = entry.record;
    }
}

LiveSet replay(std::span<const JournalEntry> entries) {
    LiveSet live;
    for (const auto& e : entries) fold(live, e);
    return live;
}

std::string encode_line(const JournalEntry& entry) {
    nlohmann::json record;
    if (entry.kind == EntryKind::upsert) {
        record = to_json(entry.record);
    } else {
        record = {{"record_id", entry.record.record_id.str()}, {"datestamp", format_rfc3339(entry.record.datestamp)}};
    }
    nlohmann::json payload{{"seq", entry.seq},
                           {"kind", kind_name(entry.kind)},
                           {"record", std::move(record)},
                           {"written_at", format_rfc3339(entry.written_at)}};
    std::string text = dump(payload);
    char hex[9];
    std::snprintf(hex, sizeof hex, "%08x", crc32c(text));
    text.pop_back();
    text += kCrcPrefix;
    text += hex;
    text += "\"}\n";
    return text;
}

std::optional<JournalEntry> decode_line(std::string_view line) {
    if (line.size() < kCrcSuffixLength + 2 || line.back() != '}') return std::nullopt;
    auto suffix = line.substr(line.size() - kCrcSuffixLength);
    if (suffix.substr(0, kCrcPrefix.size()) != kCrcPrefix || suffix[suffix.size() - 2] != '"') return std::nullopt;
    auto hex = suffix.substr(kCrcPrefix.size(), 8);
    std::uint32_t stored = 0;
    for (char c : hex) {
        int v = (c >= '0' && c <= '9') ? c - '0' : (c >= 'a' && c <= 'f') ? c - 'a' + 10 : -1;
        if (v < 0) return std::nullopt;
        stored = (stored << 4) | static_cast<std::uint32_t>(v);
    }
    std::string payload(line.substr(0, line.size() - kCrcSuffixLength));
    payload += '}';
    if (crc32c(payload) != stored) return std::nullopt;

    try {
        auto j = nlohmann::json::parse(payload);
        JournalEntry e;
        e.seq = j.at("seq").get<std::uint64_t>();
        auto kind = j.at("kind").get<std::string>();
        e.written_at = parse_rfc3339(j.at("written_at").get<std::string>());
        const auto& r = j.at("record");
        if (kind == "upsert") {
            e.kind = EntryKind::upsert;
            e.record = record_from_json(r);
        } else if (kind == "tombstone") {
            e = make_tombstone(e.seq, RecordId::from_string(r.at("record_id").get<std::string>()),
                               parse_rfc3339(r.at("datestamp").get<std::string>()), e.written_at);
        } else {
            return std::nullopt;
        }
        return e;
    } catch (const nlohmann::json::exception&) {
        return std::nullopt;
    } catch (const Error&) {
        return std::nullopt;
    }
}

Journal Journal::open(const fs::path& path, const Visitor& visit) {
    Journal j;
    j.path_ = path;
    j.fd_ = ::open(path.c_str(), O_RDWR | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (j.fd_ < 0) io_failure("cannot open journal", path);
    std::string data = read_all(j.fd_, path);
    auto result = scan(data, [&](const JournalEntry& e) {
        j.last_seq_ = e.seq;
        if (visit) visit(e);
    }, false);
    if (result.valid_bytes < data.size()) {
        j.truncated_ = data.size() - result.valid_bytes;
        if (::ftruncate(j.fd_, static_cast<off_t>(result.valid_bytes)) != 0) io_failure("cannot truncate", path);
        if (::fsync(j.fd_) != 0) io_failure("cannot sync", path);
    }
    return j;
}

Journal::Journal(Journal&& other) noexcept
    : path_(std::move(other.path_)), fd_(other.fd_), last_seq_(other.last_seq_), truncated_(other.truncated_) {
    other.fd_ = -1;
}

Journal& Journal::operator=(Journal&& other) noexcept {
    if (this != &other) {
        close();
        path_ = std::move(other.path_);
        fd_ = other.fd_;
        last_seq_ = other.last_seq_;
        truncated_ = other.truncated_;
        other.fd_ = -1;
    }
    return *this;
}

Journal::~Journal() { close(); }

void Journal::close() noexcept {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
}

void Journal::append(const JournalEntry& entry) { append_batch(std::span(&entry, 1)); }

void Journal::append_batch(std::span<const JournalEntry> entries) {
    if (fd_ < 0) throw UsageError("journal is closed");
    std::uint64_t expect = last_seq_;
    std::string buffer;
    for (const auto& e : entries) {
        if (e.seq != expect + 1) {
            throw UsageError("journal append expected seq " + std::to_string(expect + 1) + ", got " +
                             std::to_string(e.seq));
        }
        expect = e.seq;
        buffer += encode_line(e);
    }
    if (buffer.empty()) return;
    struct stat st {};
    if (::fstat(fd_, &st) != 0) io_failure("cannot stat journal", path_);
    try {
        write_all(fd_, buffer, path_);
        if (::fdatasync(fd_) != 0) io_failure("cannot sync journal", path_);
    } catch (const StoreError&) {
        // Drop whatever part of the batch made it to disk.
        if (::ftruncate(fd_, st.st_size) == 0) ::fdatasync(fd_);
        throw;
    }
    last_seq_ = expect;
}

std::vector<JournalEntry> read_journal(const fs::path& path) {
    int fd = ::open(path.c_str(), O_RDONLY | O_CLOEXEC);
    if (fd < 0) {
        if (errno == ENOENT) return {};
        io_failure("cannot open journal", path);
    }
    std::string data;
    try {
        data = read_all(fd, path);
    } catch (...) {
        ::close(fd);
        throw;
    }
    ::close(fd);
    return scan(data, {}, true).entries;
}

std::size_t compact_journal(const fs::path& path, Instant written_at) {
    auto live = replay(read_journal(path));
    std::string contents;
    std::uint64_t seq = 0;
    for (const auto& [id, record] : live) {
        contents += encode_line(JournalEntry{++seq, EntryKind::upsert, record, written_at});
    }
    write_file_atomic(path, contents);
    return live.size();
}

void write_file_atomic(const fs::path& path, std::string_view contents) {
    fs::path tmp = path;
    tmp += ".tmp";
    int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
    if (fd < 0) io_failure("cannot create", tmp);
    try {
        write_all(fd, contents, tmp);
        if (::fsync(fd) != 0) io_failure("cannot sync", tmp);
    } catch (...) {
        ::close(fd);
        ::unlink(tmp.c_str());
        throw;
    }
    ::close(fd);
    if (::rename(tmp.c_str(), path.c_str()) != 0) {
        ::unlink(tmp.c_str());
        io_failure("cannot replace", path);
    }
    sync_directory(path.has_parent_path() ? path.parent_path() : fs::path("."));
}

namespace {

fs::path ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw StoreError("cannot create store directory '" + dir.string() + "': " + ec.message());
    return dir;
}

} // namespace

Store::Store(fs::path dir, const Journal::Visitor& visit)
    : dir_(ensure_dir(dir)),
      journal_(Journal::open(dir_ / kJournalFile, [&](const JournalEntry& e) {
          fold(live_, e);
          if (visit) visit(e);
      })) {
    load_side_files();
}

void Store::load_side_files() {
    auto read_json = [&](std::string_view name) -> std::optional<nlohmann::json> {
        fs::path p = dir_ / name;
        std::error_code ec;
        if (!fs::exists(p, ec)) return std::nullopt;
        int fd = ::open(p.c_str(), O_RDONLY | O_CLOEXEC);
        if (fd < 0) io_failure("cannot open", p);
        std::string text;
        try {
            text = read_all(fd, p);
        } catch (...) {
            ::close(fd);
            throw;
        }
        ::close(fd);
        try {
            return nlohmann::json::parse(text);
        } catch (const nlohmann::json::exception& e) {
            throw StoreError("malformed '" + p.string() + "': " + e.what());
        }
    };
    if (auto j = read_json(kProvidersFile)) {
        if (!j->is_array()) throw StoreError("providers.json must hold a JSON array");
        for (const auto& item : *j) providers_.push_back(provider_from_json(item));
    }
    if (auto j = read_json(kStateFile)) {
        if (!j->is_object()) throw StoreError("harvest_state.json must hold a JSON object");
        for (const auto& [key, value] : j->items()) {
            auto s = state_from_json(value);
            s.provider_key = key;
            states_[key] = s;
        }
    }
}

void Store::commit(std::vector<JournalEntry> pending) {
    if (pending.empty()) return;
    std::unique_lock lock(mutex_);
    const Instant at = now_utc();
    std::uint64_t seq = journal_.last_seq();
    for (auto& e : pending) {
        e.seq = ++seq;
        e.written_at = at;
    }
    journal_.append_batch(pending);
    for (const auto& e : pending) fold(live_, e);
}

std::optional<MetadataRecord> Store::get(const RecordId& id) const {
    std::shared_lock lock(mutex_);
    auto it = live_.find(id);
    if (it == live_.end()) return std::nullopt;
    return it->second;
}

std::size_t Store::live_count() const {
    std::shared_lock lock(mutex_);
    return live_.size();
}

LiveSet Store::live() const {
    std::shared_lock lock(mutex_);
    return live_;
}

std::uint64_t Store::last_seq() const {
    std::shared_lock lock(mutex_);
    return journal_.last_seq();
}

std::size_t Store::compact() {
    std::unique_lock lock(mutex_);
    fs::path path = journal_.path();
    std::size_t n = compact_journal(path, now_utc());
    journal_ = Journal::open(path);
    return n;
}

std::vector<ProviderConfig> Store::providers() const {
    std::shared_lock lock(mutex_);
    return providers_;
}

std::optional<ProviderConfig> Store::provider(std::string_view key) const {
    std::shared_lock lock(mutex_);
    for (const auto& p : providers_) {
        if (p.provider_key == key) return p;
    }
    return std::nullopt;
}

void Store::add_provider(const ProviderConfig& config) {
    validate_provider(config);
    std::unique_lock lock(mutex_);
    for (const auto& p : providers_) {
        if (p.provider_key == config.provider_key) {
            throw ConflictError("provider '" + config.provider_key + "' already exists");
        }
    }
    providers_.push_back(config);
    save_providers_locked();
}

bool Store::remove_provider(std::string_view key) {
    std::unique_lock lock(mutex_);
    auto it = std::find_if(providers_.begin(), providers_.end(),
                           [&](const ProviderConfig& p) { return p.provider_key == key; });
    if (it == providers_.end()) return false;
    providers_.erase(it);
    save_providers_locked();
    states_.erase(std::string(key));
    save_states_locked();
    return true;
}

HarvestState Store::state(std::string_view provider_key) const {
    std::shared_lock lock(mutex_);
    auto it = states_.find(std::string(provider_key));
    if (it != states_.end()) return it->second;
    HarvestState s;
    s.provider_key = std::string(provider_key);
    return s;
}

void Store::save_state(const HarvestState& state) {
    std::unique_lock lock(mutex_);
    states_[state.provider_key] = state;
    save_states_locked();
}

void Store::save_providers_locked() const {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& p : providers_) j.push_back(to_json(p));
    write_file_atomic(dir_ / kProvidersFile, j.dump(2) + "\n");
}

void Store::save_states_locked() const {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [key, s] : states_) j[key] = to_json(s);
    write_file_atomic(dir_ / kStateFile, j.dump(2) + "\n");
}

} // namespace mercury
