#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pandaface/error.hpp"

namespace pandaface {

/// 8-bit RGB raster, row-major, interleaved R,G,B.
class Image {
 public:
  static constexpr int kChannels = 3;

  Image() = default;
  Image(int width, int height, std::uint8_t fill = 0) : width_(width), height_(height) {
    if (width < 1 || height < 1) {
      throw Error(ErrorCode::InvalidArgument,
                  "image dimensions must be positive, got " + std::to_string(width) + "x" +
                      std::to_string(height));
    }
    pixels_.assign(static_cast<std::size_t>(width) * height * kChannels, fill);
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool empty() const noexcept { return pixels_.empty(); }

  std::uint8_t& at(int x, int y, int c) {
    return pixels_[(static_cast<std::size_t>(y) * width_ + x) * kChannels + c];
  }
  std::uint8_t at(int x, int y, int c) const {
    return pixels_[(static_cast<std::size_t>(y) * width_ + x) * kChannels + c];
  }

  std::vector<std::uint8_t>& data() noexcept { return pixels_; }
  const std::vector<std::uint8_t>& data() const noexcept { return pixels_; }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

/// Single-channel real-valued raster, row-major.
class GrayImage {
 public:
  GrayImage() = default;
  GrayImage(int width, int height, double fill = 0.0) : width_(width), height_(height) {
    if (width < 1 || height < 1) {
      throw Error(ErrorCode::InvalidArgument, "gray image dimensions must be positive");
    }
    pixels_.assign(static_cast<std::size_t>(width) * height, fill);
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }

  double& at(int x, int y) { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }
  double at(int x, int y) const { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }

  /// Border-replicating read.
  double clamped(int x, int y) const {
    return at(std::clamp(x, 0, width_ - 1), std::clamp(y, 0, height_ - 1));
  }

  std::vector<double>& data() noexcept { return pixels_; }
  const std::vector<double>& data() const noexcept { return pixels_; }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> pixels_;
};

/// x ↦ linear·x + translation, in pixel coordinates (x right, y down).
struct AffineTransform {
  Eigen::Matrix2d linear = Eigen::Matrix2d::Identity();
  Eigen::Vector2d translation = Eigen::Vector2d::Zero();

  static AffineTransform identity() { return {}; }

  static AffineTransform from_values(double a, double b, double c, double d, double tx,
                                     double ty) {
    AffineTransform t;
    t.linear << a, b, c, d;
    t.translation << tx, ty;
    return t;
  }

  Eigen::Vector2d apply(const Eigen::Vector2d& p) const { return linear * p + translation; }

  double determinant() const { return linear.determinant(); }

  bool is_finite() const { return linear.allFinite() && translation.allFinite(); }

  AffineTransform inverse() const {
    if (std::abs(determinant()) <= 1e-12) {
      throw Error(ErrorCode::SingularTransform, "affine linear part is not invertible");
    }
    AffineTransform inv;
    inv.linear = linear.inverse();
    inv.translation = -(inv.linear * translation);
    return inv;
  }

  /// Returns the transform applying *this first, then `next`.
  AffineTransform then(const AffineTransform& next) const {
    AffineTransform out;
    out.linear = next.linear * linear;
    out.translation = next.linear * translation + next.translation;
    return out;
  }
};

inline GrayImage to_grayscale(const Image& img) {
  GrayImage gray(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      gray.at(x, y) = 0.299 * img.at(x, y, 0) + 0.587 * img.at(x, y, 1) + 0.114 * img.at(x, y, 2);
    }
  }
  return gray;
}

/// One colour plane promoted to real values.
inline GrayImage channel(const Image& img, int c) {
  GrayImage out(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) out.at(x, y) = img.at(x, y, c);
  }
  return out;
}

namespace detail {

// Catmull-Rom (a = -0.5) weights for taps at offsets -1, 0, 1, 2 from floor(x).
inline std::array<double, 4> cubic_weights(double t) {
  const double t2 = t * t;
  const double t3 = t2 * t;
  return {0.5 * (-t3 + 2.0 * t2 - t), 0.5 * (3.0 * t3 - 5.0 * t2 + 2.0),
          0.5 * (-3.0 * t3 + 4.0 * t2 + t), 0.5 * (t3 - t2)};
}

inline std::uint8_t to_pixel(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
}

// Bicubic sample of all three channels at (x, y), replicating the border.
inline std::array<double, 3> sample_bicubic(const Image& src, double x, double y) {
  const double fx = std::floor(x);
  const double fy = std::floor(y);
  const auto wx = cubic_weights(x - fx);
  const auto wy = cubic_weights(y - fy);
  const int x0 = static_cast<int>(fx) - 1;
  const int y0 = static_cast<int>(fy) - 1;
  const int w = src.width();
  const int h = src.height();

  std::array<double, 3> acc{0.0, 0.0, 0.0};
  for (int j = 0; j < 4; ++j) {
    const int yy = std::clamp(y0 + j, 0, h - 1);
    std::array<double, 3> row{0.0, 0.0, 0.0};
    for (int i = 0; i < 4; ++i) {
      const int xx = std::clamp(x0 + i, 0, w - 1);
      for (int c = 0; c < 3; ++c) row[c] += wx[i] * src.at(xx, yy, c);
    }
    for (int c = 0; c < 3; ++c) acc[c] += wy[j] * row[c];
  }
  return acc;
}

}  // namespace detail

/// Bicubic resample to `target_height` rows, preserving aspect ratio.
inline Image resize_to_height(const Image& img, int target_height) {
  if (target_height < 1) {
    throw Error(ErrorCode::InvalidArgument, "target height must be >= 1");
  }
  const int target_width = std::max(
      1, static_cast<int>(std::lround(static_cast<double>(img.width()) * target_height /
                                      img.height())));
  Image out(target_width, target_height);
  const double sx = static_cast<double>(img.width()) / target_width;
  const double sy = static_cast<double>(img.height()) / target_height;
  for (int y = 0; y < target_height; ++y) {
    const double src_y = (y + 0.5) * sy - 0.5;
    for (int x = 0; x < target_width; ++x) {
      const double src_x = (x + 0.5) * sx - 0.5;
      const auto v = detail::sample_bicubic(img, src_x, src_y);
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = detail::to_pixel(v[c]);
    }
  }
  return out;
}

/// Backward-mapped affine warp: output pixel p takes src at xform⁻¹(p).
/// Samples falling outside src replicate the nearest border pixel.
inline Image warp_affine_bicubic(const Image& src, const AffineTransform& xform, int canvas_w,
                                 int canvas_h) {
  if (std::abs(xform.determinant()) <= 1e-12) {
    throw Error(ErrorCode::SingularTransform, "cannot warp by a singular affine transform");
  }
  const AffineTransform inv = xform.inverse();
  Image out(canvas_w, canvas_h);
  for (int y = 0; y < canvas_h; ++y) {
    for (int x = 0; x < canvas_w; ++x) {
      const Eigen::Vector2d s = inv.apply(Eigen::Vector2d(x, y));
      const auto v = detail::sample_bicubic(src, s.x(), s.y());
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = detail::to_pixel(v[c]);
    }
  }
  return out;
}

}  // namespace pandaface
