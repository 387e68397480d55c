#pragma once

#include <array>
#include <atomic>
#include <cstddef>
#include <memory>

#include "hall/errors.hpp"

namespace hall {

/// Single-writer, many-reader growable array. Elements never move once
/// published, so readers index into [0, size()) without taking a lock while
/// the writer appends.
template <typename T, std::size_t ChunkSize = 256, std::size_t MaxChunks = 65536>
class AppendOnlyLog {
 public:
  AppendOnlyLog() : chunks_(std::make_unique<std::atomic<T*>[]>(MaxChunks)) {
    for (std::size_t i = 0; i < MaxChunks; ++i) chunks_[i].store(nullptr);
  }
  ~AppendOnlyLog() {
    for (std::size_t i = 0; i < MaxChunks; ++i) delete[] chunks_[i].load();
  }
  AppendOnlyLog(const AppendOnlyLog&) = delete;
  AppendOnlyLog& operator=(const AppendOnlyLog&) = delete;

  /// Writer only.
  void push_back(T value) {
    const std::size_t index = size_.load(std::memory_order_relaxed);
    const std::size_t chunk = index / ChunkSize;
    if (chunk >= MaxChunks) throw Error(ErrorCode::StorageFull, "append log is full");
    T* block = chunks_[chunk].load(std::memory_order_relaxed);
    if (!block) {
      block = new T[ChunkSize];
      chunks_[chunk].store(block, std::memory_order_release);
    }
    block[index % ChunkSize] = std::move(value);
    size_.store(index + 1, std::memory_order_release);
  }

  std::size_t size() const noexcept { return size_.load(std::memory_order_acquire); }

  /// `index` must be below a previously observed size().
  const T& operator[](std::size_t index) const noexcept {
    return chunks_[index / ChunkSize].load(std::memory_order_acquire)[index % ChunkSize];
  }

 private:
  std::unique_ptr<std::atomic<T*>[]> chunks_;
  std::atomic<std::size_t> size_{0};
};

}  // namespace hall
