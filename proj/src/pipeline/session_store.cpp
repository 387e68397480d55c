#include "hall/pipeline/session_store.hpp"

#include "hall/errors.hpp"

namespace hall {

SessionStore::SessionStore(std::size_t capacity, Clock clock)
    : capacity_(capacity), clock_(std::move(clock)) {}

Session SessionStore::create(std::optional<std::uint64_t> seed) {
  std::unique_lock lock(map_mu_);
  if (live_.load() >= capacity_) {
    throw Error(ErrorCode::CapacityExceeded, "session capacity reached",
                {{"capacity", capacity_}});
  }
  const Timestamp now = clock_();
  SessionId id = SessionId::generate();
  while (sessions_.contains(id)) id = SessionId::generate();
  auto slot = std::make_shared<Slot>();
  slot->session = create_session(id, now, seed.value_or(id.lo()));
  slot->last_access = now.time_since_epoch().count();
  sessions_.emplace(id, slot);
  ++live_;
  return slot->session;
}

std::shared_ptr<SessionStore::Slot> SessionStore::find(SessionId id) const {
  std::shared_lock lock(map_mu_);
  auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

std::optional<Session> SessionStore::get(SessionId id) const {
  auto slot = find(id);
  if (!slot) return std::nullopt;
  std::lock_guard lock(slot->mu);
  return slot->session;
}

Session SessionStore::apply(SessionId id, const SessionEvent& event) {
  auto slot = find(id);
  if (!slot) throw Error(ErrorCode::SessionNotFound, "no such session", {{"session_id", id.str()}});
  std::lock_guard lock(slot->mu);
  if (slot->removed) {
    throw Error(ErrorCode::SessionNotFound, "no such session", {{"session_id", id.str()}});
  }
  const Session& current = slot->session;
  Timestamp now = clock_();
  const Timestamp floor =
      current.history.empty() ? current.created_at : current.history.back().at + Millis{1};
  if (now < floor) now = floor;
  Session next = apply_event(current, event, now);
  if (!is_terminal(current.state) && is_terminal(next.state)) --live_;
  slot->session = next;
  return next;
}

void SessionStore::touch(SessionId id) {
  if (auto slot = find(id)) slot->last_access = clock_().time_since_epoch().count();
}

std::vector<SessionId> SessionStore::collect_idle(Millis idle) {
  const auto cutoff = (clock_() - idle).time_since_epoch().count();
  std::vector<SessionId> removed;
  std::unique_lock lock(map_mu_);
  for (auto it = sessions_.begin(); it != sessions_.end();) {
    if (it->second->last_access.load() <= cutoff) {
      std::lock_guard slot_lock(it->second->mu);
      if (!is_terminal(it->second->session.state)) --live_;
      it->second->removed = true;
      removed.push_back(it->first);
      it = sessions_.erase(it);
    } else {
      ++it;
    }
  }
  return removed;
}

std::size_t SessionStore::size() const {
  std::shared_lock lock(map_mu_);
  return sessions_.size();
}

}  // namespace hall
