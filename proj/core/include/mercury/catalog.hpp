#pragma once

#include <filesystem>
#include <mutex>

#include "mercury/index.hpp"
#include "mercury/store.hpp"

namespace mercury {

/// The durable store plus the index rebuilt from it. All record writes go
/// through `writer_lock()` so store and index change together.
class Catalog {
public:
    /// Opens the store (replaying its journal) and rebuilds the index.
    explicit Catalog(const std::filesystem::path& store_dir);

    Store& store() noexcept { return store_; }
    const Store& store() const noexcept { return store_; }
    Index& index() noexcept { return index_; }
    const Index& index() const noexcept { return index_; }

    std::unique_lock<std::mutex> writer_lock() { return std::unique_lock(writer_); }

    /// Journals `pending` and mirrors every committed entry into the index.
    /// Caller must hold writer_lock().
    void commit_locked(std::vector<JournalEntry> pending);

    /// Drops the index and rebuilds it from the store's live set. Returns the
    /// number of indexed records.
    std::size_t reindex();

    /// Compacts the journal. Returns the number of entries written.
    std::size_t compact();

private:
    std::mutex writer_;
    Store store_;
    Index index_;
};

} // namespace mercury
