#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <string_view>

#include <zlib.h>

#include "pandaface/error.hpp"
#include "pandaface/recognition.hpp"

namespace pandaface {

// Layout (all integers and reals little-endian):
//   "PANDAGAL" | u32 version | u64 len + pipeline config JSON | u64 dimension |
//   u64 entry count | entries... | u32 CRC-32 of everything before it
// Entry: u64 entry_id | u32 len + panda_id | u32 target w,h | u32 keypoint
//   source w,h | u64 count + (f64 x, f64 y)... | u32 n_components |
//   f64 y_mean | f64 y_std | f64[D] means | f64[D] stds | f64[D] beta
inline constexpr std::string_view kGalleryMagic = "PANDAGAL";
inline constexpr std::uint32_t kGalleryVersion = 1;

namespace detail {

class ByteWriter {
 public:
  void bytes(std::string_view s) { buf_.append(s); }
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s);
  }
  std::string& buffer() { return buf_; }

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  std::string buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string_view data) : data_(data) {}

  std::string_view bytes(std::size_t n) {
    need(n);
    auto s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  double f64() { return std::bit_cast<double>(get(8)); }
  std::string str() { return std::string(bytes(u32())); }
  bool at_end() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t n) const {
    if (n > data_.size() - pos_) throw Error(ErrorCode::IoError, "gallery payload is malformed");
  }
  std::uint64_t get(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    }
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  std::string_view data_;
  std::size_t pos_ = 0;
};

inline std::uint32_t crc32_of(std::string_view data) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, reinterpret_cast<const Bytef*>(data.data()), static_cast<uInt>(data.size()));
  return static_cast<std::uint32_t>(crc);
}

}  // namespace detail

inline std::string serialize_gallery(const Gallery& g) {
  detail::ByteWriter w;
  w.bytes(kGalleryMagic);
  w.u32(kGalleryVersion);
  const std::string config = Json(g.config).dump();
  w.u64(config.size());
  w.bytes(config);
  const std::size_t dim = g.dimension();
  w.u64(dim);
  w.u64(g.entries.size());
  for (const auto& e : g.entries) {
    if (static_cast<std::size_t>(e.model.dimension()) != dim) {
      throw Error(ErrorCode::DimensionMismatch, "gallery entries disagree on feature dimension");
    }
    w.u64(e.entry_id);
    w.str(e.panda_id);
    w.u32(static_cast<std::uint32_t>(e.target_width));
    w.u32(static_cast<std::uint32_t>(e.target_height));
    w.u32(static_cast<std::uint32_t>(e.keypoints.source_width));
    w.u32(static_cast<std::uint32_t>(e.keypoints.source_height));
    w.u64(e.keypoints.size());
    for (const auto& p : e.keypoints.points) {
      w.f64(p.x);
      w.f64(p.y);
    }
    const auto& s = e.model.standardizer;
    w.u32(static_cast<std::uint32_t>(e.model.n_components));
    w.f64(s.y_mean);
    w.f64(s.y_std);
    for (Eigen::Index i = 0; i < s.means.size(); ++i) w.f64(s.means(i));
    for (Eigen::Index i = 0; i < s.stds.size(); ++i) w.f64(s.stds(i));
    for (Eigen::Index i = 0; i < e.model.beta.size(); ++i) w.f64(e.model.beta(i));
  }
  const std::uint32_t crc = detail::crc32_of(w.buffer());
  w.u32(crc);
  return std::move(w.buffer());
}

inline Gallery deserialize_gallery(std::string_view data) {
  const std::size_t header = kGalleryMagic.size() + 4;
  if (data.size() < header + 4) throw Error(ErrorCode::ChecksumMismatch, "gallery file is truncated");
  if (data.substr(0, kGalleryMagic.size()) != kGalleryMagic) {
    throw Error(ErrorCode::IoError, "not a gallery file (bad magic)");
  }
  detail::ByteReader head(data.substr(kGalleryMagic.size(), 4));
  const std::uint32_t version = head.u32();
  if (version != kGalleryVersion) {
    throw Error(ErrorCode::FormatVersionMismatch,
                "gallery format version " + std::to_string(version) + ", expected " +
                    std::to_string(kGalleryVersion));
  }
  const std::string_view payload = data.substr(0, data.size() - 4);
  detail::ByteReader tail(data.substr(data.size() - 4));
  if (tail.u32() != detail::crc32_of(payload)) {
    throw Error(ErrorCode::ChecksumMismatch, "gallery checksum does not match its contents");
  }

  detail::ByteReader r(payload.substr(header));
  Gallery g;
  const auto config_len = r.u64();
  try {
    g.config = Json::parse(r.bytes(config_len)).get<PipelineConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::IoError, std::string("gallery config is malformed: ") + e.what());
  }
  const auto dim = static_cast<Eigen::Index>(r.u64());
  const auto count = r.u64();
  for (std::uint64_t k = 0; k < count; ++k) {
    GalleryEntry e;
    e.entry_id = r.u64();
    e.panda_id = r.str();
    e.target_width = static_cast<int>(r.u32());
    e.target_height = static_cast<int>(r.u32());
    e.keypoints.source_width = static_cast<int>(r.u32());
    e.keypoints.source_height = static_cast<int>(r.u32());
    const auto npts = r.u64();
    for (std::uint64_t p = 0; p < npts; ++p) {
      const double x = r.f64();
      const double y = r.f64();
      e.keypoints.points.push_back({x, y});
    }
    e.model.n_components = static_cast<int>(r.u32());
    auto& s = e.model.standardizer;
    s.y_mean = r.f64();
    s.y_std = r.f64();
    s.means.resize(dim);
    s.stds.resize(dim);
    e.model.beta.resize(dim);
    for (Eigen::Index i = 0; i < dim; ++i) s.means(i) = r.f64();
    for (Eigen::Index i = 0; i < dim; ++i) s.stds(i) = r.f64();
    for (Eigen::Index i = 0; i < dim; ++i) e.model.beta(i) = r.f64();
    g.entries.push_back(std::move(e));
  }
  if (!r.at_end()) throw Error(ErrorCode::IoError, "gallery payload has trailing bytes");
  return g;
}

inline void save_gallery(const Gallery& g, const std::string& path) {
  const std::string bytes = serialize_gallery(g);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoError, "failed writing " + path);
}

inline Gallery load_gallery(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_gallery(bytes);
}

}  // namespace pandaface
