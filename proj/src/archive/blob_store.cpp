#include "hall/archive/blob_store.hpp"

#include <cerrno>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <thread>
#include <vector>

#include <fcntl.h>
#include <unistd.h>

#include "hall/errors.hpp"

namespace fs = std::filesystem;

namespace hall {

std::string_view to_string(CrashPoint p) noexcept {
  switch (p) {
    case CrashPoint::BlobTempWritten: return "BlobTempWritten";
    case CrashPoint::BlobStored: return "BlobStored";
    case CrashPoint::IndexPartialWrite: return "IndexPartialWrite";
    case CrashPoint::IndexWritten: return "IndexWritten";
    case CrashPoint::SnapshotWritten: return "SnapshotWritten";
  }
  return "unknown";
}

namespace {

constexpr std::string_view kTempSuffix = ".tmp";

// Writes the whole buffer and fsyncs. Returns errno on failure, 0 on success.
int write_file_durable(const fs::path& path, std::span<const std::uint8_t> data) {
  int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
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
  int rc = ::fsync(fd);
  int err = rc != 0 ? errno : 0;
  ::close(fd);
  return err;
}

}  // namespace

BlobStore::BlobStore(fs::path root, std::uint64_t max_bytes)
    : root_(std::move(root)), max_bytes_(max_bytes) {
  fs::create_directories(root_ / "blobs");
  std::uint64_t total = 0;
  for (const auto& entry : fs::recursive_directory_iterator(root_ / "blobs")) {
    if (entry.is_regular_file() && entry.path().extension() == ".zip") total += entry.file_size();
  }
  total_bytes_ = total;
}

fs::path BlobStore::path_for(std::string_view ref) const {
  std::string name(ref);
  return root_ / "blobs" / name.substr(0, 2) / (name + ".zip");
}

std::string BlobStore::put(std::span<const std::uint8_t> data) {
  std::string ref = sha256_hex(data);
  fs::path final_path = path_for(ref);
  std::error_code ec;
  if (fs::exists(final_path, ec)) return ref;

  if (max_bytes_ != 0 && total_bytes_.load() + data.size() > max_bytes_) {
    throw Error(ErrorCode::StorageFull, "blob quota exhausted",
                {{"quota_bytes", max_bytes_}, {"requested", data.size()}});
  }
  fs::create_directories(final_path.parent_path(), ec);
  if (ec) throw Error(ErrorCode::StorageFull, "cannot create blob directory: " + ec.message());

  auto tid = std::hash<std::thread::id>{}(std::this_thread::get_id());
  fs::path temp = final_path;
  temp += "." + std::to_string(tid) + "." + std::to_string(temp_counter_++) +
          std::string(kTempSuffix);
  if (int err = write_file_durable(temp, data); err != 0) {
    fs::remove(temp, ec);
    throw Error(err == ENOSPC || err == EDQUOT ? ErrorCode::StorageFull : ErrorCode::Internal,
                "blob write failed: " + std::string(std::strerror(err)));
  }
  fault(CrashPoint::BlobTempWritten);
  fs::rename(temp, final_path, ec);
  if (ec) {
    fs::remove(temp, ec);
    throw Error(ErrorCode::Internal, "blob rename failed: " + ec.message());
  }
  total_bytes_ += data.size();
  return ref;
}

bool BlobStore::contains(std::string_view ref) const {
  if (!is_sha256_hex(ref)) return false;
  std::error_code ec;
  return fs::is_regular_file(path_for(ref), ec);
}

Bytes BlobStore::get(std::string_view ref) const {
  if (!is_sha256_hex(ref)) {
    throw Error(ErrorCode::NotFound, "not a blob reference", {{"ref", std::string(ref)}});
  }
  std::ifstream in(path_for(ref), std::ios::binary);
  if (!in) throw Error(ErrorCode::NotFound, "blob not found", {{"ref", std::string(ref)}});
  in.seekg(0, std::ios::end);
  auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0);
  Bytes out(size);
  in.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(size));
  if (!in) throw Error(ErrorCode::Internal, "blob read failed", {{"ref", std::string(ref)}});
  return out;
}

std::size_t BlobStore::remove_stale_temps() {
  std::vector<fs::path> stale;
  std::error_code ec;
  for (auto it = fs::recursive_directory_iterator(root_ / "blobs", ec);
       it != fs::recursive_directory_iterator(); it.increment(ec)) {
    if (ec) break;
    if (it->is_regular_file() && it->path().string().ends_with(kTempSuffix)) {
      stale.push_back(it->path());
    }
  }
  for (const auto& p : stale) fs::remove(p, ec);
  return stale.size();
}

}  // namespace hall
