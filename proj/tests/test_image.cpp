#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "pandaface/image.hpp"

using namespace pandaface;

namespace {

Image smooth_image(int w, int h) {
  Image img(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double v = 128.0 + 60.0 * std::sin(2.0 * std::numbers::pi * x / 23.0) +
                       40.0 * std::cos(2.0 * std::numbers::pi * (x + 2 * y) / 31.0);
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = static_cast<std::uint8_t>(std::lround(v * (1.0 - 0.1 * c)));
    }
  }
  return img;
}

Image noise_image(int w, int h) {
  Image img(w, h);
  unsigned s = 12345;
  for (auto& p : img.data()) {
    s = s * 1103515245u + 12345u;
    p = static_cast<std::uint8_t>((s >> 16) & 0xFF);
  }
  return img;
}

}  // namespace

TEST(Image, RejectsEmptyDimensions) {
  EXPECT_THROW(Image(0, 4), Error);
  EXPECT_THROW(GrayImage(3, 0), Error);
}

TEST(Grayscale, WhiteBlackAndRed) {
  const auto white = to_grayscale(Image(4, 3, 255));
  for (double v : white.data()) EXPECT_DOUBLE_EQ(v, 255.0);
  const auto black = to_grayscale(Image(4, 3, 0));
  for (double v : black.data()) EXPECT_DOUBLE_EQ(v, 0.0);

  Image red(1, 1);
  red.at(0, 0, 0) = 255;
  EXPECT_NEAR(to_grayscale(red).at(0, 0), 76.245, 1e-12);
}

TEST(Grayscale, StaysInRange) {
  const auto g = to_grayscale(noise_image(17, 9));
  for (double v : g.data()) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 255.0);
  }
}

TEST(Resize, Dimensions) {
  EXPECT_EQ(resize_to_height(Image(200, 200), 100).width(), 100);
  const auto r = resize_to_height(Image(150, 300), 100);
  EXPECT_EQ(r.width(), 50);
  EXPECT_EQ(r.height(), 100);
  EXPECT_EQ(resize_to_height(Image(1, 300), 10).width(), 1);
  EXPECT_THROW(resize_to_height(Image(4, 4), 0), Error);
}

TEST(Resize, ConstantStaysConstant) {
  const Image src(37, 53, 91);
  for (int h : {10, 53, 100, 211}) {
    const auto r = resize_to_height(src, h);
    for (auto p : r.data()) EXPECT_EQ(p, 91);
  }
}

TEST(Warp, IdentityIsExact) {
  const auto src = noise_image(31, 22);
  EXPECT_EQ(warp_affine_bicubic(src, AffineTransform::identity(), 31, 22), src);
}

TEST(Warp, IntegerTranslationShiftsColumns) {
  const auto src = noise_image(20, 12);
  const auto out = warp_affine_bicubic(src, AffineTransform::from_values(1, 0, 0, 1, 3, 0), 20, 12);
  for (int y = 0; y < 12; ++y) {
    for (int x = 3; x < 20; ++x) {
      for (int c = 0; c < 3; ++c) EXPECT_EQ(out.at(x, y, c), src.at(x - 3, y, c));
    }
  }
  // Columns left of the shift replicate the source border.
  for (int y = 0; y < 12; ++y) EXPECT_EQ(out.at(0, y, 0), src.at(0, y, 0));
}

TEST(Warp, SingularTransformRejected) {
  const Image src(8, 8, 10);
  try {
    warp_affine_bicubic(src, AffineTransform::from_values(0, 0, 0, 0, 1, 1), 8, 8);
    FAIL() << "expected SingularTransform";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SingularTransform);
  }
}

TEST(Warp, CanvasTakesRequestedSize) {
  const auto out = warp_affine_bicubic(noise_image(10, 10), AffineTransform::identity(), 7, 13);
  EXPECT_EQ(out.width(), 7);
  EXPECT_EQ(out.height(), 13);
}

TEST(Warp, CompositionMatchesSingleWarpOnSmoothImage) {
  const auto src = smooth_image(120, 100);
  const double a = 5.0 * std::numbers::pi / 180.0;
  const auto A = AffineTransform::from_values(std::cos(a), -std::sin(a), std::sin(a), std::cos(a), 2.5, -1.5);
  const auto B = AffineTransform::from_values(1.05, 0.02, -0.03, 0.97, -1.0, 2.0);
  const auto twice = warp_affine_bicubic(warp_affine_bicubic(src, A, 120, 100), B, 120, 100);
  const auto once = warp_affine_bicubic(src, A.then(B), 120, 100);
  int worst = 0;
  for (int y = 20; y < 80; ++y) {
    for (int x = 20; x < 100; ++x) {
      for (int c = 0; c < 3; ++c) worst = std::max(worst, std::abs(twice.at(x, y, c) - once.at(x, y, c)));
    }
  }
  EXPECT_LT(worst, 2);
}

TEST(Affine, InverseAndComposition) {
  const auto A = AffineTransform::from_values(1.2, 0.1, -0.05, 0.9, 5, -3);
  const auto round_trip = A.then(A.inverse());
  EXPECT_LT((round_trip.linear - Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT(round_trip.translation.cwiseAbs().maxCoeff(), 1e-12);
  const Eigen::Vector2d p(3.0, 4.0);
  const auto B = AffineTransform::from_values(0.5, 0, 0, 2, 1, 1);
  EXPECT_LT((A.then(B).apply(p) - B.apply(A.apply(p))).norm(), 1e-12);
}

TEST(Bicubic, WeightsPartitionUnity) {
  for (double t : {0.0, 0.1, 0.5, 0.77, 0.999}) {
    const auto w = detail::cubic_weights(t);
    EXPECT_NEAR(w[0] + w[1] + w[2] + w[3], 1.0, 1e-15);
  }
  const auto w0 = detail::cubic_weights(0.0);
  EXPECT_DOUBLE_EQ(w0[1], 1.0);
  EXPECT_DOUBLE_EQ(w0[0], 0.0);
}
