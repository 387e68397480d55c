#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>

#include "hall/digest.hpp"

namespace hall {

/// Named points inside storage writes where tests may inject a crash.
enum class CrashPoint {
  BlobTempWritten,      // temp file complete, not yet renamed into place
  BlobStored,           // blob renamed into place, index not yet touched
  IndexPartialWrite,    // half of the index line is on disk
  IndexWritten,         // index line durable, in-memory state not updated
  SnapshotWritten,      // snapshot renamed into place, index not yet truncated
};

std::string_view to_string(CrashPoint p) noexcept;

/// Thrown by fault hooks to abandon an operation mid-write.
struct SimulatedCrash : std::exception {
  CrashPoint point;
  explicit SimulatedCrash(CrashPoint p) : point(p) {}
  const char* what() const noexcept override { return "simulated crash"; }
};

using FaultHook = std::function<void(CrashPoint)>;

/// Content-addressed file store: blobs/<first two hex>/<sha256>.zip under the
/// root directory. Writes go through a temp file and an atomic rename, so a
/// blob is either absent or complete.
class BlobStore {
 public:
  /// `max_bytes` of 0 disables the quota.
  explicit BlobStore(std::filesystem::path root, std::uint64_t max_bytes = 0);

  /// Stores `data` and returns its digest. Idempotent for identical content.
  /// Throws StorageFull when the quota or the filesystem is exhausted.
  std::string put(std::span<const std::uint8_t> data);

  /// Throws NotFound for unknown or malformed refs.
  Bytes get(std::string_view ref) const;
  bool contains(std::string_view ref) const;

  std::filesystem::path path_for(std::string_view ref) const;
  const std::filesystem::path& root() const noexcept { return root_; }
  std::uint64_t total_bytes() const noexcept { return total_bytes_.load(); }

  /// Removes temp files left behind by interrupted writes.
  std::size_t remove_stale_temps();

  void set_fault_hook(FaultHook hook) { fault_hook_ = std::move(hook); }

 private:
  void fault(CrashPoint p) const {
    if (fault_hook_) fault_hook_(p);
  }

  std::filesystem::path root_;
  std::uint64_t max_bytes_;
  std::atomic<std::uint64_t> total_bytes_{0};
  std::atomic<std::uint64_t> temp_counter_{0};
  FaultHook fault_hook_;
};

}  // namespace hall
