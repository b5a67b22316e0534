#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mercury/model.hpp"
#include "mercury/provider.hpp"

namespace mercury {

enum class EntryKind { upsert, tombstone };

/// One journal event. Tombstones only carry record_id and datestamp in
/// `record` (with deleted set).
struct JournalEntry {
    std::uint64_t seq = 0;
    EntryKind kind = EntryKind::upsert;
    MetadataRecord record;
    Instant written_at{};

    friend bool operator==(const JournalEntry&, const JournalEntry&) = default;
};

JournalEntry make_tombstone(std::uint64_t seq, const RecordId& id, Instant datestamp, Instant written_at);

using LiveSet = std::map<RecordId, MetadataRecord>;

/// Folds one entry into a live set: upserts replace when the incoming
/// datestamp is not older than the stored one, tombstones remove.
void fold(LiveSet& live, const JournalEntry& entry);

LiveSet replay(std::span<const JournalEntry> entries);

/// CRC32C (Castagnoli) of `bytes`.
std::uint32_t crc32c(std::string_view bytes);

/// A line is the compact JSON payload with `,"crc":"xxxxxxxx"}` spliced in
/// place of its closing brace, followed by "\n".
std::string encode_line(const JournalEntry& entry);

/// Parses one line (without its "\n"). Returns nullopt when the checksum or
/// JSON is bad.
std::optional<JournalEntry> decode_line(std::string_view line);

/// Append-only, line-oriented journal file.
class Journal {
public:
    using Visitor = std::function<void(const JournalEntry&)>;

    /// Opens (creating if absent), validates every line and hands each entry
    /// to `visit` in order. A torn or corrupt final line is truncated away;
    /// any earlier bad line throws IntegrityError.
    static Journal open(const std::filesystem::path& path, const Visitor& visit = {});

    Journal(Journal&& other) noexcept;
    Journal& operator=(Journal&& other) noexcept;
    Journal(const Journal&) = delete;
    Journal& operator=(const Journal&) = delete;
    ~Journal();

    /// Durably appends; entry.seq must equal last_seq() + 1 (UsageError).
    /// IO failure throws StoreError.
    void append(const JournalEntry& entry);
    /// Appends consecutive entries with a single write and sync.
    void append_batch(std::span<const JournalEntry> entries);

    std::uint64_t last_seq() const noexcept { return last_seq_; }
    /// Bytes cut off the tail when the journal was opened.
    std::uint64_t truncated_bytes() const noexcept { return truncated_; }
    const std::filesystem::path& path() const noexcept { return path_; }

private:
    Journal() = default;
    void close() noexcept;

    std::filesystem::path path_;
    int fd_ = -1;
    std::uint64_t last_seq_ = 0;
    std::uint64_t truncated_ = 0;
};

/// Reads and validates a journal without opening it for writing.
std::vector<JournalEntry> read_journal(const std::filesystem::path& path);

/// Rewrites the journal at `path` as one upsert per live record (ordered by
/// record_id, seq from 1) via write-new-then-rename. Returns the new entry count.
std::size_t compact_journal(const std::filesystem::path& path, Instant written_at);

/// Writes `contents` to `path` atomically (temp file, fsync, rename).
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

/// The store directory: journal.ndjson, harvest_state.json, providers.json.
/// Holds the replayed live set in memory. Thread-safe; one writer at a time.
class Store {
public:
    static constexpr std::string_view kJournalFile = "journal.ndjson";
    static constexpr std::string_view kStateFile = "harvest_state.json";
    static constexpr std::string_view kProvidersFile = "providers.json";

    /// Creates the directory if needed and replays the journal. `visit` sees
    /// every replayed entry (used to rebuild the index).
    explicit Store(std::filesystem::path dir, const Journal::Visitor& visit = {});

    const std::filesystem::path& dir() const noexcept { return dir_; }

    /// Appends a batch of pending upserts/tombstones (seq and written_at are
    /// assigned here) and folds them into the live set.
    void commit(std::vector<JournalEntry> pending);

    std::optional<MetadataRecord> get(const RecordId& id) const;
    std::size_t live_count() const;
    LiveSet live() const;
    std::uint64_t last_seq() const;

    /// Compacts the journal in place. Returns the new entry count.
    std::size_t compact();

    std::vector<ProviderConfig> providers() const;
    std::optional<ProviderConfig> provider(std::string_view key) const;
    /// Throws ValidationError for an invalid config or a duplicate key.
    void add_provider(const ProviderConfig& config);
    bool remove_provider(std::string_view key);

    HarvestState state(std::string_view provider_key) const;
    void save_state(const HarvestState& state);

private:
    void load_side_files();
    void save_providers_locked() const;
    void save_states_locked() const;

    std::filesystem::path dir_;
    mutable std::shared_mutex mutex_;
    LiveSet live_;  // filled while journal_ is opened, so declared first
    Journal journal_;
    std::vector<ProviderConfig> providers_;
    std::map<std::string, HarvestState> states_;
};

} // namespace mercury
