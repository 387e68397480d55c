#include "hall/archive/archive.hpp"

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

#include <fcntl.h>
#include <unistd.h>

namespace fs = std::filesystem;

namespace hall {

namespace {

[[noreturn]] void throw_io(const std::string& what, int err) {
  throw Error(err == ENOSPC || err == EDQUOT ? ErrorCode::StorageFull : ErrorCode::Internal,
              what + ": " + std::strerror(err));
}

// Appends bytes to `path` and fsyncs; returns errno or 0.
int append_durable(const fs::path& path, std::string_view data) {
  int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd < 0) return errno;
  std::size_t done = 0;
  while (done < data.size()) {
    ssize_t n = ::write(fd, data.data() + done, data.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      int err = errno;
      ::close(fd);
      return err;
    }
    done += static_cast<std::size_t>(n);
  }
  int err = ::fdatasync(fd) != 0 ? errno : 0;
  ::close(fd);
  return err;
}

void fsync_dir(const fs::path& dir) {
  int fd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY | O_CLOEXEC);
  if (fd >= 0) {
    ::fsync(fd);
    ::close(fd);
  }
}

std::string read_all(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return {};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string to_base64url(std::string_view raw) {
  std::string s = base64_encode(raw);
  for (char& c : s) {
    if (c == '+') c = '-';
    if (c == '/') c = '_';
  }
  while (!s.empty() && s.back() == '=') s.pop_back();
  return s;
}

std::optional<std::string> from_base64url(std::string_view text) {
  std::string s(text);
  for (char& c : s) {
    if (c == '-') {
      c = '+';
    } else if (c == '_') {
      c = '/';
    } else if (!std::isalnum(static_cast<unsigned char>(c))) {
      return std::nullopt;
    }
  }
  if (s.size() % 4 == 1) return std::nullopt;
  while (s.size() % 4 != 0) s.push_back('=');
  auto bytes = base64_decode(s);
  if (!bytes) return std::nullopt;
  return std::string(bytes->begin(), bytes->end());
}

// Unbiased draw from [0, bound) by rejection.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

}  // namespace

void to_json(json& j, const ArchivePage& page) {
  j = json{{"entries", page.entries}};
  j["next_cursor"] = page.next_cursor ? json(*page.next_cursor) : json(nullptr);
}

std::string encode_cursor(const ArchiveEntry& last) {
  return to_base64url(format_rfc3339(last.created_at) + "|" + last.id.str());
}

std::optional<std::pair<Timestamp, SessionId>> decode_cursor(std::string_view cursor) {
  auto raw = from_base64url(cursor);
  if (!raw) return std::nullopt;
  auto bar = raw->find('|');
  if (bar == std::string::npos) return std::nullopt;
  auto t = parse_rfc3339(std::string_view(*raw).substr(0, bar));
  auto id = SessionId::parse(std::string_view(*raw).substr(bar + 1));
  if (!t || !id) return std::nullopt;
  return std::pair{*t, *id};
}

ProphecyArchive::ProphecyArchive(std::shared_ptr<BlobStore> blobs, ArchiveOptions options)
    : blobs_(std::move(blobs)),
      options_(options),
      index_path_(blobs_->root() / "index.jsonl"),
      snapshot_path_(blobs_->root() / "snapshot.json") {
  recover();
}

void ProphecyArchive::set_fault_hook(FaultHook hook) {
  fault_hook_ = hook;
  blobs_->set_fault_hook(std::move(hook));
}

void ProphecyArchive::recover() {
  std::lock_guard lock(writer_mu_);
  recovery_ = {};
  recovery_.temps_removed = blobs_->remove_stale_temps();
  std::error_code ec;
  fs::path snapshot_tmp = snapshot_path_;
  snapshot_tmp += ".tmp";
  if (fs::remove(snapshot_tmp, ec)) ++recovery_.temps_removed;

  std::vector<ArchiveEntry> loaded;
  if (fs::exists(snapshot_path_)) {
    json doc = json::parse(read_all(snapshot_path_), nullptr, false);
    if (doc.is_discarded() || !doc.contains("entries")) {
      throw Error(ErrorCode::Internal, "snapshot.json is corrupt");
    }
    for (const auto& e : doc["entries"]) loaded.push_back(e.get<ArchiveEntry>());
    recovery_.snapshot_entries = loaded.size();
  }
  std::unordered_set<SessionId> seen;
  for (const auto& e : loaded) seen.insert(e.id);

  // Only newline-terminated, parseable lines count; anything after the first
  // bad line is a torn tail from an interrupted append.
  const std::string index = read_all(index_path_);
  std::size_t good_bytes = 0;
  std::size_t pos = 0;
  while (pos < index.size()) {
    std::size_t nl = index.find('\n', pos);
    if (nl == std::string::npos) break;
    json doc = json::parse(index.begin() + static_cast<std::ptrdiff_t>(pos),
                           index.begin() + static_cast<std::ptrdiff_t>(nl), nullptr, false);
    if (doc.is_discarded()) break;
    ArchiveEntry entry;
    try {
      entry = doc.get<ArchiveEntry>();
    } catch (const Error&) {
      break;
    }
    pos = nl + 1;
    good_bytes = pos;
    if (!seen.insert(entry.id).second) {
      ++recovery_.duplicates_skipped;
      continue;
    }
    ++recovery_.index_entries;
    loaded.push_back(std::move(entry));
  }
  recovery_.torn_bytes_dropped = index.size() - good_bytes;

  std::vector<ArchiveEntry> kept;
  kept.reserve(loaded.size());
  for (auto& e : loaded) {
    if (!blobs_->contains(e.video_ref)) {
      ++recovery_.dangling_dropped;
      continue;
    }
    if (!kept.empty() && e.created_at < kept.back().created_at) {
      e.created_at = kept.back().created_at;
    }
    kept.push_back(std::move(e));
  }
  for (auto& e : kept) {
    ids_.insert(e.id);
    log_.push_back(std::move(e));
  }

  index_bytes_ = good_bytes;
  if (recovery_.torn_bytes_dropped || recovery_.dangling_dropped ||
      recovery_.duplicates_skipped) {
    write_snapshot_locked();
    recovery_.rewritten = true;
  }
}

void ProphecyArchive::write_snapshot_locked() {
  json doc{{"version", 1}, {"entries", json::array()}};
  const std::size_t n = log_.size();
  for (std::size_t i = 0; i < n; ++i) doc["entries"].push_back(log_[i]);
  const std::string text = doc.dump() + "\n";

  fs::path tmp = snapshot_path_;
  tmp += ".tmp";
  std::error_code ec;
  fs::remove(tmp, ec);
  if (int err = append_durable(tmp, text); err != 0) {
    fs::remove(tmp, ec);
    throw_io("snapshot write failed", err);
  }
  fs::rename(tmp, snapshot_path_, ec);
  if (ec) throw Error(ErrorCode::Internal, "snapshot rename failed: " + ec.message());
  fsync_dir(snapshot_path_.parent_path());
  fault(CrashPoint::SnapshotWritten);

  if (::truncate(index_path_.c_str(), 0) != 0 && errno != ENOENT) {
    throw_io("index truncate failed", errno);
  }
  index_bytes_ = 0;
  appends_since_compact_ = 0;
}

void ProphecyArchive::append_index_line_locked(const std::string& line) {
  const std::size_t half = line.size() / 2;
  int err = append_durable(index_path_, std::string_view(line).substr(0, half));
  if (err == 0) {
    fault(CrashPoint::IndexPartialWrite);
    err = append_durable(index_path_, std::string_view(line).substr(half));
  }
  if (err != 0) {
    // Roll back a partial line; if even that fails, recovery drops the torn
    // tail on the next open.
    [[maybe_unused]] int rc = ::truncate(index_path_.c_str(), static_cast<off_t>(index_bytes_));
    throw_io("index append failed", err);
  }
  index_bytes_ += line.size();
}

SessionId ProphecyArchive::append(ArchiveEntry entry) {
  std::lock_guard lock(writer_mu_);
  if (ids_.contains(entry.id)) {
    throw Error(ErrorCode::DuplicateId, "archive already holds this id",
                {{"id", entry.id.str()}});
  }
  if (!blobs_->contains(entry.video_ref)) {
    throw Error(ErrorCode::DanglingVideoRef, "video_ref does not resolve to a stored blob",
                {{"video_ref", entry.video_ref}});
  }
  const std::size_t n = log_.size();
  if (n > 0 && entry.created_at < log_[n - 1].created_at) entry.created_at = log_[n - 1].created_at;

  append_index_line_locked(json(entry).dump() + "\n");
  fault(CrashPoint::IndexWritten);

  const SessionId id = entry.id;
  ids_.insert(id);
  log_.push_back(std::move(entry));
  if (options_.compact_every > 0 && ++appends_since_compact_ >= options_.compact_every) {
    write_snapshot_locked();
  }
  return id;
}

SessionId ProphecyArchive::publish(ArchiveEntry entry, std::span<const std::uint8_t> video_bytes) {
  entry.video_ref = blobs_->put(video_bytes);
  fault(CrashPoint::BlobStored);
  return append(std::move(entry));
}

void ProphecyArchive::compact() {
  std::lock_guard lock(writer_mu_);
  write_snapshot_locked();
}

ArchivePage ProphecyArchive::list(const std::optional<std::string>& cursor, int limit) const {
  if (limit < 1 || limit > kMaxPageLimit) {
    throw Error(ErrorCode::InvalidArgument, "limit must be between 1 and 100",
                {{"limit", limit}});
  }
  const std::size_t n = log_.size();
  std::size_t end = n;  // exclusive upper bound in insertion order
  if (cursor) {
    auto decoded = decode_cursor(*cursor);
    if (!decoded) throw Error(ErrorCode::BadCursor, "cursor is not valid");
    const auto& [created_at, id] = *decoded;
    // created_at is non-decreasing in insertion order
    std::size_t lo = 0, hi = n;
    while (lo < hi) {
      std::size_t mid = (lo + hi) / 2;
      if (log_[mid].created_at < created_at) lo = mid + 1; else hi = mid;
    }
    std::optional<std::size_t> found;
    for (std::size_t i = lo; i < n && log_[i].created_at == created_at; ++i) {
      if (log_[i].id == id) {
        found = i;
        break;
      }
    }
    if (!found) throw Error(ErrorCode::BadCursor, "cursor does not match any entry");
    end = *found;
  }

  ArchivePage page;
  while (end > 0 && page.entries.size() < static_cast<std::size_t>(limit)) {
    page.entries.push_back(log_[--end]);
  }
  if (end > 0 && !page.entries.empty()) page.next_cursor = encode_cursor(page.entries.back());
  return page;
}

std::vector<ArchiveEntry> ProphecyArchive::sample_for_display(int n, std::uint64_t seed) const {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "n must be at least 1", {{"n", n}});
  const std::size_t size = log_.size();
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(n), size);
  std::vector<std::size_t> order(size);
  for (std::size_t i = 0; i < size; ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  std::vector<ArchiveEntry> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t j = i + static_cast<std::size_t>(uniform_below(rng, size - i));
    std::swap(order[i], order[j]);
    out.push_back(log_[order[i]]);
  }
  return out;
}

Bytes ProphecyArchive::fetch_video(std::string_view video_ref) const {
  Bytes bytes = blobs_->get(video_ref);
  if (sha256_hex(bytes) != video_ref) {
    throw Error(ErrorCode::Internal, "stored blob does not match its digest",
                {{"video_ref", std::string(video_ref)}});
  }
  return bytes;
}

std::optional<ArchiveEntry> ProphecyArchive::find(SessionId id) const {
  const std::size_t n = log_.size();
  for (std::size_t i = n; i-- > 0;) {
    if (log_[i].id == id) return log_[i];
  }
  return std::nullopt;
}

std::vector<ArchiveEntry> ProphecyArchive::entries() const {
  const std::size_t n = log_.size();
  std::vector<ArchiveEntry> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(log_[i]);
  return out;
}

}  // namespace hall
