#include "mercury/catalog.hpp"

namespace mercury {

Catalog::Catalog(const std::filesystem::path& store_dir) : store_(store_dir) { reindex(); }

void Catalog::commit_locked(std::vector<JournalEntry> pending) {
    store_.commit(pending);
    for (const auto& e : pending) {
        if (e.kind == EntryKind::tombstone) {
            index_.delete_document(e.record.record_id);
        } else {
            index_.upsert_document(e.record);
        }
    }
}

std::size_t Catalog::reindex() {
    auto lock = writer_lock();
    index_.clear();
    for (const auto& [id, record] : store_.live()) index_.upsert_document(record);
    return index_.size();
}

std::size_t Catalog::compact() {
    auto lock = writer_lock();
    return store_.compact();
}

} // namespace mercury
