#pragma once

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pandaface/error.hpp"
#include "pandaface/image.hpp"

namespace pandaface {

enum class LbpVariant { Riu2P8R1, U2P8R2 };

constexpr int kLbpPoints = 8;

constexpr std::string_view to_string(LbpVariant v) {
  return v == LbpVariant::Riu2P8R1 ? "riu2_P8_R1" : "u2_P8_R2";
}

inline LbpVariant lbp_variant_from_string(std::string_view s) {
  if (s == "riu2_P8_R1") return LbpVariant::Riu2P8R1;
  if (s == "u2_P8_R2") return LbpVariant::U2P8R2;
  throw Error(ErrorCode::ConfigError, "unknown lbp variant '" + std::string(s) + "'");
}

constexpr double lbp_radius(LbpVariant v) { return v == LbpVariant::Riu2P8R1 ? 1.0 : 2.0; }

constexpr int lbp_bin_count(LbpVariant v) { return v == LbpVariant::Riu2P8R1 ? 10 : 59; }

/// Number of 0/1 changes walking once around the circular 8-bit pattern.
constexpr int circular_transitions(unsigned code) {
  const unsigned rotated = ((code >> 1) | (code << 7)) & 0xFFu;
  return std::popcount((code ^ rotated) & 0xFFu);
}

constexpr bool is_uniform(unsigned code) { return circular_transitions(code) <= 2; }

/// Sum over p of s(g_p - g_c)·2^p with s(a) = 1 iff a >= 0.
inline int lbp_code_from_samples(double center, std::span<const double, kLbpPoints> neighbors) {
  int code = 0;
  for (int p = 0; p < kLbpPoints; ++p) {
    if (neighbors[p] - center >= 0.0) code |= 1 << p;
  }
  return code;
}

namespace detail {

struct LbpOffsets {
  std::array<double, kLbpPoints> dx{};
  std::array<double, kLbpPoints> dy{};
};

// Offsets of the P sample points, angle 0 at (+R, 0); offsets within 1e-9 of
// an integer are snapped so axis samples read exact pixels.
inline LbpOffsets lbp_offsets(double radius) {
  LbpOffsets o;
  for (int p = 0; p < kLbpPoints; ++p) {
    const double angle = 2.0 * std::numbers::pi * p / kLbpPoints;
    double dx = radius * std::cos(angle);
    double dy = radius * std::sin(angle);
    if (std::abs(dx - std::round(dx)) < 1e-9) dx = std::round(dx);
    if (std::abs(dy - std::round(dy)) < 1e-9) dy = std::round(dy);
    o.dx[p] = dx;
    o.dy[p] = dy;
  }
  return o;
}

// Bilinear read written as nested lerps so a constant neighbourhood
// reproduces its value exactly.
inline double bilinear(const GrayImage& img, double x, double y) {
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const double fx = x - x0;
  const double fy = y - y0;
  const double v00 = img.at(x0, y0);
  if (fx == 0.0 && fy == 0.0) return v00;
  const double v10 = fx == 0.0 ? v00 : img.at(x0 + 1, y0);
  const double v01 = fy == 0.0 ? v00 : img.at(x0, y0 + 1);
  const double v11 = (fx == 0.0 || fy == 0.0) ? (fx == 0.0 ? v01 : v10) : img.at(x0 + 1, y0 + 1);
  const double top = v00 + fx * (v10 - v00);
  const double bottom = v01 + fx * (v11 - v01);
  return top + fy * (bottom - top);
}

inline int lbp_code_at(const GrayImage& img, int x, int y, const LbpOffsets& o) {
  std::array<double, kLbpPoints> samples{};
  for (int p = 0; p < kLbpPoints; ++p) samples[p] = bilinear(img, x + o.dx[p], y + o.dy[p]);
  return lbp_code_from_samples(img.at(x, y), samples);
}

}  // namespace detail

/// LBP code at (x, y) with P = 8 samples on a circle of radius R.
inline int lbp_code(const GrayImage& img, int x, int y, double radius) {
  const int margin = static_cast<int>(std::ceil(radius));
  if (x < margin || y < margin || x >= img.width() - margin || y >= img.height() - margin) {
    throw Error(ErrorCode::OutOfBounds, "lbp sampling circle leaves the image");
  }
  return detail::lbp_code_at(img, x, y, detail::lbp_offsets(radius));
}

/// Rotation-invariant uniform mapping: popcount for uniform codes, 9 otherwise.
constexpr int lbp_bin_riu2(int code) {
  const auto c = static_cast<unsigned>(code);
  return is_uniform(c) ? std::popcount(c) : kLbpPoints + 1;
}

namespace detail {

constexpr std::array<int, 256> make_u2_table() {
  std::array<int, 256> table{};
  int next = 0;
  for (unsigned c = 0; c < 256; ++c) table[c] = is_uniform(c) ? next++ : -1;
  for (auto& v : table) {
    if (v < 0) v = next;
  }
  return table;
}

inline constexpr std::array<int, 256> kU2Table = make_u2_table();

}  // namespace detail

/// Uniform mapping: the 58 uniform codes in ascending order take bins 0..57,
/// every other code shares bin 58.
constexpr int lbp_bin_u2(int code) { return detail::kU2Table[static_cast<unsigned>(code)]; }

/// Per-pixel histogram bin; -1 marks border pixels whose circle would leave
/// the image.
struct BinMap {
  int width = 0;
  int height = 0;
  std::vector<std::int16_t> bins;

  int at(int x, int y) const { return bins[static_cast<std::size_t>(y) * width + x]; }
  bool valid(int x, int y) const { return at(x, y) >= 0; }
};

inline BinMap lbp_map(const GrayImage& channel, LbpVariant variant) {
  const double radius = lbp_radius(variant);
  const int margin = static_cast<int>(std::ceil(radius));
  if (channel.width() < 2 * margin + 1 || channel.height() < 2 * margin + 1) {
    throw Error(ErrorCode::ImageTooSmall, "image too small for LBP radius");
  }
  const auto offsets = detail::lbp_offsets(radius);
  BinMap map{channel.width(), channel.height(),
             std::vector<std::int16_t>(static_cast<std::size_t>(channel.width()) *
                                           channel.height(),
                                       -1)};
  for (int y = margin; y < channel.height() - margin; ++y) {
    for (int x = margin; x < channel.width() - margin; ++x) {
      const int code = detail::lbp_code_at(channel, x, y, offsets);
      const int bin = variant == LbpVariant::Riu2P8R1 ? lbp_bin_riu2(code) : lbp_bin_u2(code);
      map.bins[static_cast<std::size_t>(y) * map.width + x] = static_cast<std::int16_t>(bin);
    }
  }
  return map;
}

}  // namespace pandaface
