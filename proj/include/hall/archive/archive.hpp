#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "hall/archive/append_log.hpp"
#include "hall/archive/blob_store.hpp"
#include "hall/domain.hpp"

namespace hall {

struct ArchivePage {
  std::vector<ArchiveEntry> entries;  // created_at descending
  std::optional<std::string> next_cursor;
};

void to_json(json& j, const ArchivePage& page);

inline constexpr int kMaxPageLimit = 100;

struct ArchiveOptions {
  /// Rewrite the snapshot and truncate the index after this many appends.
  std::size_t compact_every = 256;
};

/// What recovery found when the archive was opened.
struct RecoveryReport {
  std::size_t snapshot_entries = 0;
  std::size_t index_entries = 0;
  std::size_t torn_bytes_dropped = 0;
  std::size_t dangling_dropped = 0;
  std::size_t duplicates_skipped = 0;
  std::size_t temps_removed = 0;
  bool rewritten = false;
};

/// Append-only record of completed prophecies.
///
/// On disk, under the data directory:
///   blobs/<ab>/<digest>.zip   frame archives (shared BlobStore)
///   index.jsonl               one ArchiveEntry per line, appended and fsynced
///   snapshot.json             compacted entries, replaced atomically
///
/// Appends are serialized; readers never lock and see a consistent prefix.
class ProphecyArchive {
 public:
  /// Opens (and recovers) the archive rooted at the blob store's root.
  explicit ProphecyArchive(std::shared_ptr<BlobStore> blobs, ArchiveOptions options = {});

  /// Throws DuplicateId, DanglingVideoRef or StorageFull. created_at is
  /// raised to the previous entry's if it would go backwards.
  SessionId append(ArchiveEntry entry);

  /// Stores `video_bytes` and appends `entry` pointing at them.
  SessionId publish(ArchiveEntry entry, std::span<const std::uint8_t> video_bytes);

  /// `limit` in [1, 100] (InvalidArgument otherwise); BadCursor for cursors
  /// this archive did not issue.
  ArchivePage list(const std::optional<std::string>& cursor, int limit) const;

  /// min(n, size) distinct entries drawn uniformly without replacement with
  /// a generator seeded by `seed`. n must be >= 1.
  std::vector<ArchiveEntry> sample_for_display(int n, std::uint64_t seed) const;

  /// Stored frame archive bytes; throws NotFound. The digest is re-checked.
  Bytes fetch_video(std::string_view video_ref) const;

  std::optional<ArchiveEntry> find(SessionId id) const;
  /// Every entry in insertion order.
  std::vector<ArchiveEntry> entries() const;
  std::size_t size() const noexcept { return log_.size(); }

  /// Writes snapshot.json with every entry and empties index.jsonl.
  void compact();

  const RecoveryReport& recovery() const noexcept { return recovery_; }
  BlobStore& blobs() noexcept { return *blobs_; }

  /// Installs the hook on this archive and its blob store.
  void set_fault_hook(FaultHook hook);

 private:
  void recover();
  void write_snapshot_locked();
  void append_index_line_locked(const std::string& line);
  void fault(CrashPoint p) const {
    if (fault_hook_) fault_hook_(p);
  }

  std::shared_ptr<BlobStore> blobs_;
  ArchiveOptions options_;
  std::filesystem::path index_path_;
  std::filesystem::path snapshot_path_;

  std::mutex writer_mu_;
  std::unordered_set<SessionId> ids_;  // writer side
  std::size_t appends_since_compact_ = 0;
  std::uint64_t index_bytes_ = 0;
  AppendOnlyLog<ArchiveEntry> log_;

  RecoveryReport recovery_;
  FaultHook fault_hook_;
};

/// Cursor codec: base64url of "<RFC 3339 created_at>|<session id>".
std::string encode_cursor(const ArchiveEntry& last);
std::optional<std::pair<Timestamp, SessionId>> decode_cursor(std::string_view cursor);

}  // namespace hall
