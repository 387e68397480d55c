#pragma once

#include <atomic>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <unordered_map>
#include <vector>

#include "hall/session_fsm.hpp"

namespace hall {

/// Owns live sessions. Events on one session are applied one at a time;
/// different sessions never contend beyond the map lookup. "Live" means not
/// yet Completed or Failed; only live sessions count toward capacity.
class SessionStore {
 public:
  using Clock = std::function<Timestamp()>;

  explicit SessionStore(std::size_t capacity, Clock clock = now_utc);

  /// Throws CapacityExceeded when `capacity` sessions are live.
  Session create(std::optional<std::uint64_t> seed = std::nullopt);

  std::optional<Session> get(SessionId id) const;

  /// Applies an event stamped with the store clock (nudged forward so the
  /// session history stays strictly increasing). Throws SessionNotFound or
  /// InvalidTransition; a rejected event leaves the session untouched.
  Session apply(SessionId id, const SessionEvent& event);

  /// Records client activity for idle collection.
  void touch(SessionId id);

  /// Drops sessions idle for at least `idle`; returns the removed ids.
  std::vector<SessionId> collect_idle(Millis idle);

  std::size_t live_count() const noexcept { return live_.load(); }
  std::size_t size() const;
  std::size_t capacity() const noexcept { return capacity_; }
  Timestamp now() const { return clock_(); }

 private:
  struct Slot {
    mutable std::mutex mu;
    Session session;
    bool removed = false;  // guarded by mu
    std::atomic<Timestamp::rep> last_access;
  };

  std::shared_ptr<Slot> find(SessionId id) const;

  std::size_t capacity_;
  Clock clock_;
  mutable std::shared_mutex map_mu_;
  std::unordered_map<SessionId, std::shared_ptr<Slot>> sessions_;
  std::atomic<std::size_t> live_{0};
};

}  // namespace hall
