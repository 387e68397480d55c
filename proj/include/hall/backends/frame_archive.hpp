#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hall/digest.hpp"
#include "hall/domain.hpp"

namespace hall {

/// Contents of manifest.json inside a frame archive.
struct FrameManifest {
  double duration_s = 0.0;
  int fps = 0;
  int frame_count = 0;
  int width = 0;
  int height = 0;
  std::string prophecy_digest;  // sha256 hex of the prophecy text

  friend bool operator==(const FrameManifest&, const FrameManifest&) = default;
};

void to_json(json& j, const FrameManifest& m);
void from_json(const json& j, FrameManifest& m);

/// `frame_000042.ppm`
std::string frame_entry_name(int index);

/// Binary P6 PPM with maxval 255.
Bytes encode_ppm(int width, int height, std::span<const std::uint8_t> rgb);

struct PpmImage {
  int width = 0;
  int height = 0;
  std::span<const std::uint8_t> rgb;
};
PpmImage decode_ppm(std::span<const std::uint8_t> data);

/// Streams entries into an uncompressed (method 0) ZIP held in memory.
/// Timestamps are pinned to 1980-01-01 so identical input yields identical
/// bytes.
class StoredZipWriter {
 public:
  void add(std::string_view name, std::span<const std::uint8_t> data);
  /// Appends the central directory; the writer is spent afterwards.
  Bytes finish();

 private:
  struct CentralRecord {
    std::string name;
    std::uint32_t crc = 0;
    std::uint32_t size = 0;
    std::uint32_t offset = 0;
  };
  Bytes out_;
  std::vector<CentralRecord> records_;
};

struct ZipEntryView {
  std::string name;
  std::span<const std::uint8_t> data;
};

/// Reads a stored-only ZIP. Throws MalformedArchive on structural problems,
/// compressed entries or CRC mismatches.
std::vector<ZipEntryView> read_stored_zip(std::span<const std::uint8_t> zip);

/// Parsed view over frame archive bytes; `bytes` must outlive the view.
class FrameArchiveView {
 public:
  /// Throws MalformedArchive if the manifest or any frame disagrees with it.
  explicit FrameArchiveView(std::span<const std::uint8_t> bytes);

  const FrameManifest& manifest() const noexcept { return manifest_; }
  /// Raw PPM bytes of frame `index`.
  std::span<const std::uint8_t> frame(int index) const;

 private:
  FrameManifest manifest_;
  std::vector<std::span<const std::uint8_t>> frames_;
};

}  // namespace hall
