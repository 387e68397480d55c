#include "hall/pipeline/video_gate.hpp"

#include <algorithm>
#include <vector>

#include "hall/errors.hpp"

namespace hall {

VideoGate::Permit::Permit(Permit&& other) noexcept
    : gate_(std::exchange(other.gate_, nullptr)), ticket_(other.ticket_) {}

VideoGate::Permit& VideoGate::Permit::operator=(Permit&& other) noexcept {
  if (this != &other) {
    release();
    gate_ = std::exchange(other.gate_, nullptr);
    ticket_ = other.ticket_;
  }
  return *this;
}

VideoGate::Permit::~Permit() { release(); }

void VideoGate::Permit::release() {
  if (gate_) std::exchange(gate_, nullptr)->release(ticket_);
}

VideoGate::VideoGate(int limit) : limit_(limit) {
  if (limit < 1) throw Error(ErrorCode::ConfigError, "video concurrency must be at least 1");
}

VideoGate::Permit VideoGate::acquire(SessionId owner, double expected_s, std::stop_token stop) {
  std::unique_lock lock(mu_);
  if (shutdown_) throw Error(ErrorCode::Cancelled, "video gate is shut down");
  const std::uint64_t ticket = next_ticket_++;
  queue_.push_back(ticket);
  queued_.emplace(ticket, Job{owner, expected_s, {}});

  auto admissible = [&] {
    return shutdown_ || (queue_.front() == ticket && static_cast<int>(running_.size()) < limit_);
  };
  bool ok = stop.stop_possible() ? cv_.wait(lock, stop, admissible)
                                 : (cv_.wait(lock, admissible), true);
  if (!ok || shutdown_) {
    queue_.erase(std::find(queue_.begin(), queue_.end(), ticket));
    queued_.erase(ticket);
    cv_.notify_all();
    throw Error(ErrorCode::Cancelled, "video render wait cancelled");
  }
  queue_.pop_front();
  Job job = queued_.at(ticket);
  queued_.erase(ticket);
  job.started = std::chrono::steady_clock::now();
  running_.emplace(ticket, job);
  peak_ = std::max(peak_, static_cast<int>(running_.size()));
  cv_.notify_all();
  return Permit(this, ticket);
}

void VideoGate::release(std::uint64_t ticket) {
  {
    std::lock_guard lock(mu_);
    running_.erase(ticket);
  }
  cv_.notify_all();
}

double VideoGate::wait_estimate_locked(std::uint64_t ticket, SteadyTime now) const {
  // Earliest time each slot frees up, then hand slots to queued jobs in order.
  std::vector<double> slots;
  for (const auto& [_, job] : running_) {
    double ran = std::chrono::duration<double>(now - job.started).count();
    slots.push_back(std::max(0.0, job.expected_s - ran));
  }
  while (static_cast<int>(slots.size()) < limit_) slots.push_back(0.0);
  for (std::uint64_t t : queue_) {
    auto earliest = std::min_element(slots.begin(), slots.end());
    if (t == ticket) return *earliest;
    *earliest += queued_.at(t).expected_s;
  }
  return 0.0;
}

std::optional<VideoGate::Position> VideoGate::locate(SessionId owner) const {
  std::lock_guard lock(mu_);
  const auto now = std::chrono::steady_clock::now();
  for (const auto& [ticket, job] : running_) {
    if (job.owner == owner) {
      return Position{true, 0.0, std::chrono::duration<double>(now - job.started).count()};
    }
  }
  for (const auto& [ticket, job] : queued_) {
    if (job.owner == owner) return Position{false, wait_estimate_locked(ticket, now), 0.0};
  }
  return std::nullopt;
}

int VideoGate::running() const {
  std::lock_guard lock(mu_);
  return static_cast<int>(running_.size());
}

int VideoGate::queue_depth() const {
  std::lock_guard lock(mu_);
  return static_cast<int>(queue_.size());
}

int VideoGate::peak_running() const {
  std::lock_guard lock(mu_);
  return peak_;
}

void VideoGate::shutdown() {
  {
    std::lock_guard lock(mu_);
    shutdown_ = true;
  }
  cv_.notify_all();
}

}  // namespace hall
