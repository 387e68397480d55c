#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <mutex>
#include <optional>
#include <stop_token>
#include <unordered_map>

#include "hall/ids.hpp"

namespace hall {

/// Bounds concurrent video renders. Waiters are admitted strictly in arrival
/// order. The gate also answers "how long until my render starts" from the
/// expected durations of running and queued jobs.
class VideoGate {
 public:
  class Permit {
   public:
    Permit() = default;
    Permit(Permit&& other) noexcept;
    Permit& operator=(Permit&& other) noexcept;
    Permit(const Permit&) = delete;
    Permit& operator=(const Permit&) = delete;
    ~Permit();

    void release();
    explicit operator bool() const noexcept { return gate_ != nullptr; }

   private:
    friend class VideoGate;
    Permit(VideoGate* gate, std::uint64_t ticket) : gate_(gate), ticket_(ticket) {}
    VideoGate* gate_ = nullptr;
    std::uint64_t ticket_ = 0;
  };

  struct Position {
    bool running = false;
    double queue_wait_s = 0.0;    // estimated, 0 when running
    double running_for_s = 0.0;   // 0 while queued
  };

  explicit VideoGate(int limit);

  /// Blocks until a slot is free and every earlier waiter has been admitted.
  /// Throws Cancelled on stop request or shutdown.
  Permit acquire(SessionId owner, double expected_s, std::stop_token stop = {});

  std::optional<Position> locate(SessionId owner) const;

  int limit() const noexcept { return limit_; }
  int running() const;
  int queue_depth() const;
  int peak_running() const;

  /// Wakes every waiter with Cancelled and refuses new acquisitions.
  void shutdown();

 private:
  using SteadyTime = std::chrono::steady_clock::time_point;
  struct Job {
    SessionId owner;
    double expected_s = 0.0;
    SteadyTime started{};
  };

  void release(std::uint64_t ticket);
  double wait_estimate_locked(std::uint64_t ticket, SteadyTime now) const;

  const int limit_;
  mutable std::mutex mu_;
  std::condition_variable_any cv_;
  std::uint64_t next_ticket_ = 1;
  std::deque<std::uint64_t> queue_;
  std::unordered_map<std::uint64_t, Job> queued_;
  std::unordered_map<std::uint64_t, Job> running_;
  int peak_ = 0;
  bool shutdown_ = false;
};

}  // namespace hall
