#include "hall/backends/frame_archive.hpp"

#include <cstdio>
#include <limits>

#include <zlib.h>

#include "hall/errors.hpp"

namespace hall {

namespace {

constexpr std::uint32_t kLocalHeaderSig = 0x04034b50;
constexpr std::uint32_t kCentralHeaderSig = 0x02014b50;
constexpr std::uint32_t kEndOfCentralSig = 0x06054b50;
constexpr std::uint16_t kVersion = 10;       // 1.0: stored entries only
constexpr std::uint16_t kDosDate1980 = 0x0021;  // 1980-01-01
constexpr std::size_t kMaxEntries = 0xffff;

void put16(Bytes& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put32(Bytes& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint16_t get16(std::span<const std::uint8_t> b, std::size_t at) {
  if (at + 2 > b.size()) throw Error(ErrorCode::MalformedArchive, "truncated zip record");
  return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

std::uint32_t get32(std::span<const std::uint8_t> b, std::size_t at) {
  if (at + 4 > b.size()) throw Error(ErrorCode::MalformedArchive, "truncated zip record");
  return static_cast<std::uint32_t>(b[at]) | (static_cast<std::uint32_t>(b[at + 1]) << 8) |
         (static_cast<std::uint32_t>(b[at + 2]) << 16) |
         (static_cast<std::uint32_t>(b[at + 3]) << 24);
}

std::uint32_t crc_of(std::span<const std::uint8_t> data) {
  uLong crc = crc32(0L, Z_NULL, 0);
  std::size_t done = 0;
  while (done < data.size()) {
    auto chunk = static_cast<uInt>(std::min<std::size_t>(data.size() - done, 1u << 30));
    crc = crc32(crc, data.data() + done, chunk);
    done += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

}  // namespace

void to_json(json& j, const FrameManifest& m) {
  j = json{{"duration_s", m.duration_s}, {"fps", m.fps},
           {"frame_count", m.frame_count}, {"width", m.width},
           {"height", m.height},         {"prophecy_digest", m.prophecy_digest}};
}

void from_json(const json& j, FrameManifest& m) {
  try {
    m.duration_s = j.at("duration_s").get<double>();
    m.fps = j.at("fps").get<int>();
    m.frame_count = j.at("frame_count").get<int>();
    m.width = j.at("width").get<int>();
    m.height = j.at("height").get<int>();
    m.prophecy_digest = j.at("prophecy_digest").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedArchive, std::string("bad manifest: ") + e.what());
  }
}

std::string frame_entry_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%06d.ppm", index);
  return buf;
}

Bytes encode_ppm(int width, int height, std::span<const std::uint8_t> rgb) {
  std::string header = "P6\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  Bytes out(header.begin(), header.end());
  out.insert(out.end(), rgb.begin(), rgb.end());
  return out;
}

PpmImage decode_ppm(std::span<const std::uint8_t> data) {
  // Header: "P6" ws width ws height ws maxval, then exactly one whitespace byte.
  std::size_t pos = 0;
  auto skip_ws = [&] {
    while (pos < data.size() && (data[pos] == ' ' || data[pos] == '\n' || data[pos] == '\t' ||
                                 data[pos] == '\r')) {
      ++pos;
    }
  };
  auto read_int = [&]() -> long {
    skip_ws();
    long v = 0;
    std::size_t start = pos;
    while (pos < data.size() && data[pos] >= '0' && data[pos] <= '9' && v < 1'000'000) {
      v = v * 10 + (data[pos++] - '0');
    }
    if (pos == start) throw Error(ErrorCode::MalformedArchive, "bad PPM header");
    return v;
  };
  if (data.size() < 2 || data[0] != 'P' || data[1] != '6') {
    throw Error(ErrorCode::MalformedArchive, "frame is not a P6 PPM");
  }
  pos = 2;
  long w = read_int();
  long h = read_int();
  long maxval = read_int();
  if (maxval != 255 || w <= 0 || h <= 0) {
    throw Error(ErrorCode::MalformedArchive, "unsupported PPM dimensions or depth");
  }
  ++pos;
  const auto expected = static_cast<std::size_t>(w * h * 3);
  if (pos > data.size() || data.size() - pos != expected) {
    throw Error(ErrorCode::MalformedArchive, "PPM pixel data size mismatch");
  }
  return {static_cast<int>(w), static_cast<int>(h), data.subspan(pos)};
}

void StoredZipWriter::add(std::string_view name, std::span<const std::uint8_t> data) {
  if (records_.size() >= kMaxEntries || name.size() > 0xffff ||
      data.size() > std::numeric_limits<std::uint32_t>::max() ||
      out_.size() + data.size() + 30 + name.size() > std::numeric_limits<std::uint32_t>::max()) {
    throw Error(ErrorCode::InvalidJob, "frame archive exceeds ZIP32 limits");
  }
  CentralRecord rec{std::string(name), crc_of(data), static_cast<std::uint32_t>(data.size()),
                    static_cast<std::uint32_t>(out_.size())};
  put32(out_, kLocalHeaderSig);
  put16(out_, kVersion);
  put16(out_, 0);  // flags
  put16(out_, 0);  // method: stored
  put16(out_, 0);  // time
  put16(out_, kDosDate1980);
  put32(out_, rec.crc);
  put32(out_, rec.size);
  put32(out_, rec.size);
  put16(out_, static_cast<std::uint16_t>(name.size()));
  put16(out_, 0);  // extra
  out_.insert(out_.end(), name.begin(), name.end());
  out_.insert(out_.end(), data.begin(), data.end());
  records_.push_back(std::move(rec));
}

Bytes StoredZipWriter::finish() {
  const auto cd_offset = static_cast<std::uint32_t>(out_.size());
  for (const auto& rec : records_) {
    put32(out_, kCentralHeaderSig);
    put16(out_, kVersion);  // made by
    put16(out_, kVersion);  // needed
    put16(out_, 0);
    put16(out_, 0);
    put16(out_, 0);
    put16(out_, kDosDate1980);
    put32(out_, rec.crc);
    put32(out_, rec.size);
    put32(out_, rec.size);
    put16(out_, static_cast<std::uint16_t>(rec.name.size()));
    put16(out_, 0);  // extra
    put16(out_, 0);  // comment
    put16(out_, 0);  // disk
    put16(out_, 0);  // internal attrs
    put32(out_, 0);  // external attrs
    put32(out_, rec.offset);
    out_.insert(out_.end(), rec.name.begin(), rec.name.end());
  }
  const auto cd_size = static_cast<std::uint32_t>(out_.size() - cd_offset);
  put32(out_, kEndOfCentralSig);
  put16(out_, 0);
  put16(out_, 0);
  put16(out_, static_cast<std::uint16_t>(records_.size()));
  put16(out_, static_cast<std::uint16_t>(records_.size()));
  put32(out_, cd_size);
  put32(out_, cd_offset);
  put16(out_, 0);
  records_.clear();
  return std::move(out_);
}

std::vector<ZipEntryView> read_stored_zip(std::span<const std::uint8_t> zip) {
  if (zip.size() < 22) throw Error(ErrorCode::MalformedArchive, "too small to be a zip");
  std::size_t eocd = std::string::npos;
  const std::size_t lowest = zip.size() > 22 + 0xffff ? zip.size() - 22 - 0xffff : 0;
  for (std::size_t at = zip.size() - 22 + 1; at-- > lowest;) {
    if (get32(zip, at) == kEndOfCentralSig) {
      eocd = at;
      break;
    }
  }
  if (eocd == std::string::npos) {
    throw Error(ErrorCode::MalformedArchive, "end of central directory not found");
  }
  const std::size_t count = get16(zip, eocd + 10);
  std::size_t pos = get32(zip, eocd + 16);

  std::vector<ZipEntryView> entries;
  entries.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    if (get32(zip, pos) != kCentralHeaderSig) {
      throw Error(ErrorCode::MalformedArchive, "bad central directory record");
    }
    const std::uint16_t method = get16(zip, pos + 10);
    const std::uint32_t crc = get32(zip, pos + 16);
    const std::uint32_t csize = get32(zip, pos + 20);
    const std::uint32_t usize = get32(zip, pos + 24);
    const std::uint16_t name_len = get16(zip, pos + 28);
    const std::uint16_t extra_len = get16(zip, pos + 30);
    const std::uint16_t comment_len = get16(zip, pos + 32);
    const std::uint32_t local = get32(zip, pos + 42);
    if (pos + 46 + name_len > zip.size()) {
      throw Error(ErrorCode::MalformedArchive, "truncated central directory");
    }
    std::string name(reinterpret_cast<const char*>(zip.data() + pos + 46), name_len);
    if (method != 0 || csize != usize) {
      throw Error(ErrorCode::MalformedArchive, "compressed entry: " + name);
    }
    if (get32(zip, local) != kLocalHeaderSig) {
      throw Error(ErrorCode::MalformedArchive, "bad local header for " + name);
    }
    const std::size_t data_at = local + 30 + get16(zip, local + 26) + get16(zip, local + 28);
    if (data_at + csize > zip.size()) {
      throw Error(ErrorCode::MalformedArchive, "entry data out of range: " + name);
    }
    auto data = zip.subspan(data_at, csize);
    if (crc_of(data) != crc) throw Error(ErrorCode::MalformedArchive, "CRC mismatch: " + name);
    entries.push_back({std::move(name), data});
    pos += 46 + name_len + extra_len + comment_len;
  }
  return entries;
}

FrameArchiveView::FrameArchiveView(std::span<const std::uint8_t> bytes) {
  auto entries = read_stored_zip(bytes);
  if (entries.empty() || entries.front().name != "manifest.json") {
    throw Error(ErrorCode::MalformedArchive, "manifest.json must be the first entry");
  }
  const auto& raw = entries.front().data;
  json doc = json::parse(raw.begin(), raw.end(), nullptr, false);
  if (doc.is_discarded()) throw Error(ErrorCode::MalformedArchive, "manifest is not JSON");
  manifest_ = doc.get<FrameManifest>();
  if (manifest_.frame_count < 0 ||
      static_cast<std::size_t>(manifest_.frame_count) + 1 != entries.size()) {
    throw Error(ErrorCode::MalformedArchive, "frame count disagrees with manifest");
  }
  frames_.reserve(entries.size() - 1);
  for (std::size_t i = 1; i < entries.size(); ++i) {
    const int index = static_cast<int>(i - 1);
    if (entries[i].name != frame_entry_name(index)) {
      throw Error(ErrorCode::MalformedArchive, "unexpected entry " + entries[i].name);
    }
    PpmImage img = decode_ppm(entries[i].data);
    if (img.width != manifest_.width || img.height != manifest_.height) {
      throw Error(ErrorCode::MalformedArchive, "frame dimensions disagree with manifest");
    }
    frames_.push_back(entries[i].data);
  }
}

std::span<const std::uint8_t> FrameArchiveView::frame(int index) const {
  if (index < 0 || static_cast<std::size_t>(index) >= frames_.size()) {
    throw Error(ErrorCode::NotFound, "frame index out of range");
  }
  return frames_[static_cast<std::size_t>(index)];
}

}  // namespace hall
