#include <cmath>
#include <complex>
#include <map>
#include <numbers>

#include <gtest/gtest.h>

#include "pandaface/gabor.hpp"
#include "support.hpp"

using namespace pandaface;

namespace {

// Direct spatial convolution with replicate padding at one pixel.
std::complex<double> direct_response(const GrayImage& img, const GaborKernel& k, int x, int y) {
  std::complex<double> acc{0.0, 0.0};
  for (int dy = -k.radius; dy <= k.radius; ++dy) {
    for (int dx = -k.radius; dx <= k.radius; ++dx) acc += img.clamped(x - dx, y - dy) * k.at(dx, dy);
  }
  return acc;
}

// Most frequent index over the region at least `margin` from every border.
std::map<int, int> interior_histogram(const OrientationField& f, int margin) {
  std::map<int, int> h;
  for (int y = margin; y < f.height - margin; ++y) {
    for (int x = margin; x < f.width - margin; ++x) ++h[f.at(x, y)];
  }
  return h;
}

const GaborBank& default_bank() {
  static const GaborBank bank{GaborParams{}};
  return bank;
}

}  // namespace

TEST(GaborBank, SixtyFourNormalisedZeroMeanFilters) {
  const auto& bank = default_bank();
  ASSERT_EQ(bank.size(), 64u);
  for (const auto& k : bank.filters()) {
    std::complex<double> sum{0.0, 0.0};
    double energy = 0.0;
    for (const auto& v : k.values) {
      sum += v;
      energy += std::norm(v);
    }
    EXPECT_LT(std::abs(sum), 1e-12);
    EXPECT_NEAR(energy, 1.0, 1e-12);
    EXPECT_EQ(k.radius, static_cast<int>(std::ceil(3.0 * k.sigma)));
    EXPECT_NEAR(k.sigma, 0.56 * k.wavelength, 1e-12);
    EXPECT_NEAR(k.theta, k.orientation * std::numbers::pi / 8.0, 1e-12);
  }
  EXPECT_EQ(bank.max_radius(), static_cast<int>(std::ceil(3.0 * 0.56 * 16.0)));
}

TEST(GaborBank, OppositeOrientationsAreConjugates) {
  const auto& bank = default_bank();
  for (int m = 0; m < 4; ++m) {
    for (int r = 0; r < 8; ++r) {
      const auto& a = bank.filter(m, r);
      const auto& b = bank.filter(m, r + 8);
      ASSERT_EQ(a.values.size(), b.values.size());
      for (std::size_t i = 0; i < a.values.size(); ++i) EXPECT_EQ(b.values[i], std::conj(a.values[i]));
    }
  }
}

TEST(GaborBank, RejectsBadParams) {
  GaborParams p;
  p.wavelengths = {8.0, 4.0};
  EXPECT_THROW(GaborBank{p}, Error);
  p = GaborParams{};
  p.num_orientations = 15;
  EXPECT_THROW(GaborBank{p}, Error);
}

TEST(GaborResponse, ConstantImageIsSilent) {
  const GrayImage flat(40, 40, 173.0);
  for (const auto& k : default_bank().filters()) EXPECT_LT(std::abs(direct_response(flat, k, 20, 20)), 1e-9);
  const auto field = gabor_orientation_field(GrayImage(60, 60, 173.0), default_bank());
  for (auto v : field.index) EXPECT_EQ(v, 0);
}

TEST(GaborResponse, VerticalStripesPreferThetaZero) {
  const auto& bank = default_bank();
  for (int m = 0; m < 4; ++m) {
    const double lambda = bank.params().wavelengths[m];
    const auto img = pandaface::testing::grating(121, 121, 0.0, lambda);
    const double tuned = std::abs(direct_response(img, bank.filter(m, 0), 60, 60));
    for (int r = 1; r < 16; ++r) {
      if (r == 8) continue;  // same undirected orientation, equal magnitude
      EXPECT_GT(tuned, std::abs(direct_response(img, bank.filter(m, r), 60, 60))) << "scale " << m << " r " << r;
    }
  }
}

TEST(GaborField, MatchesDirectConvolution) {
  const auto img = to_grayscale(pandaface::testing::textured_image(72, 64, 3));
  const auto& bank = default_bank();
  const auto field = gabor_orientation_field(img, bank);
  int compared = 0;
  for (int y = 0; y < 64; y += 9) {
    for (int x = 0; x < 72; x += 7) {
      double best = 0.0;
      double second = 0.0;
      int best_r = 0;
      for (int r = 0; r < 8; ++r) {
        for (int m = 0; m < 4; ++m) {
          const double mag = std::abs(direct_response(img, bank.filter(m, r), x, y));
          if (mag > best) {
            second = std::max(second, best);
            best = mag;
            best_r = r;
          } else {
            second = std::max(second, mag);
          }
        }
      }
      if (best - second < 1e-6 * best) continue;  // numerically ambiguous
      EXPECT_EQ(field.at(x, y), best_r) << "at " << x << "," << y;
      ++compared;
    }
  }
  EXPECT_GT(compared, 50);
}

TEST(GaborField, GratingOrientationAndRotationShift) {
  const auto& bank = default_bank();
  const int margin = bank.max_radius();
  std::vector<int> dominant(16);
  for (int r = 0; r < 16; ++r) {
    const double theta = r * std::numbers::pi / 8.0;
    const auto field = gabor_orientation_field(pandaface::testing::grating(110, 110, theta, 8.0), bank);
    const auto hist = interior_histogram(field, margin);
    int total = 0;
    int hits = 0;
    int mode = -1;
    for (const auto& [idx, count] : hist) {
      total += count;
      if (idx == r || idx == (r + 8) % 16) hits += count;
      if (mode < 0 || count > hist.at(mode)) mode = idx;
    }
    EXPECT_GE(hits, 0.9 * total) << "r* = " << r;
    dominant[r] = mode;
  }
  for (int r = 0; r < 16; ++r) {
    const int next = dominant[(r + 1) % 16];
    // The dominant set {d, d+8} moves by exactly one step.
    EXPECT_EQ(((next - dominant[r]) % 8 + 8) % 8, 1) << "r* = " << r;
  }
}

TEST(GaborField, InvariantToConstantOffset) {
  const auto img = to_grayscale(pandaface::testing::textured_image(64, 64, 5));
  GrayImage brighter = img;
  for (auto& v : brighter.data()) v += 37.0;
  const auto& bank = default_bank();
  EXPECT_EQ(gabor_orientation_field(img, bank).index, gabor_orientation_field(brighter, bank).index);
}

TEST(GaborField, IndicesInRangeAndDeterministic) {
  const auto img = to_grayscale(pandaface::testing::textured_image(80, 100, 9));
  const auto& bank = default_bank();
  const auto a = gabor_orientation_field(img, bank);
  EXPECT_EQ(a.index, gabor_orientation_field(img, bank).index);
  for (auto v : a.index) EXPECT_LT(v, 16);
}

TEST(GaborField, ImageSmallerThanKernelRejected) {
  try {
    gabor_orientation_field(GrayImage(40, 100, 1.0), default_bank());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ImageTooSmall);
  }
}
