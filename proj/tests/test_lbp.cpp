#include <array>
#include <bit>
#include <map>
#include <set>

#include <gtest/gtest.h>

#include "pandaface/lbp.hpp"

using namespace pandaface;

namespace {

// Reference transition count by walking the bits one at a time.
int transitions_by_walk(unsigned code) {
  int t = 0;
  for (int p = 0; p < 8; ++p) {
    const unsigned a = (code >> p) & 1u;
    const unsigned b = (code >> ((p + 1) % 8)) & 1u;
    t += a != b;
  }
  return t;
}

}  // namespace

TEST(LbpCode, ConstantImageIsAllOnes) {
  const GrayImage g(7, 7, 33.0);
  EXPECT_EQ(lbp_code(g, 3, 3, 1.0), 255);
  EXPECT_EQ(lbp_code(g, 3, 3, 2.0), 255);
}

TEST(LbpCode, DarkerNeighboursGiveZero) {
  std::array<double, 8> n{};
  n.fill(50.0);
  EXPECT_EQ(lbp_code_from_samples(100.0, n), 0);
}

TEST(LbpCode, AlternatingNeighboursGive85) {
  const std::array<double, 8> n{200, 0, 200, 0, 200, 0, 200, 0};
  EXPECT_EQ(lbp_code_from_samples(100.0, n), 85);

  // Same pattern laid out on a 3x3 grid: p=0 east, angles grow toward +y
  // (down), so p=2 is south, p=4 west and p=6 north.
  GrayImage g(3, 3, 0.0);
  g.at(1, 1) = 100.0;
  g.at(2, 1) = 200.0;
  g.at(1, 2) = 200.0;
  g.at(0, 1) = 200.0;
  g.at(1, 0) = 200.0;
  EXPECT_EQ(lbp_code(g, 1, 1, 1.0), 85);
}

TEST(LbpCode, CircleMustStayInside) {
  const GrayImage g(5, 5, 1.0);
  EXPECT_THROW(lbp_code(g, 1, 2, 2.0), Error);
  EXPECT_NO_THROW(lbp_code(g, 2, 2, 2.0));
}

TEST(LbpBins, Riu2Examples) {
  EXPECT_EQ(lbp_bin_riu2(255), 8);
  EXPECT_EQ(lbp_bin_riu2(0), 0);
  EXPECT_EQ(lbp_bin_riu2(85), 9);
}

TEST(LbpBins, U2Examples) {
  EXPECT_EQ(lbp_bin_u2(0), 0);
  EXPECT_EQ(lbp_bin_u2(255), 57);
  EXPECT_EQ(lbp_bin_u2(85), 58);
}

TEST(LbpBins, BruteForceOverAllCodes) {
  std::set<int> riu2_image;
  std::set<int> u2_image;
  std::map<int, int> popcount_class;
  int uniform = 0;
  int previous_uniform_bin = -1;
  for (unsigned c = 0; c < 256; ++c) {
    EXPECT_EQ(circular_transitions(c), transitions_by_walk(c));
    const bool uni = transitions_by_walk(c) <= 2;
    riu2_image.insert(lbp_bin_riu2(static_cast<int>(c)));
    u2_image.insert(lbp_bin_u2(static_cast<int>(c)));
    if (uni) {
      ++uniform;
      ++popcount_class[std::popcount(c)];
      EXPECT_EQ(lbp_bin_u2(static_cast<int>(c)), previous_uniform_bin + 1);
      previous_uniform_bin = lbp_bin_u2(static_cast<int>(c));
    } else {
      EXPECT_EQ(lbp_bin_u2(static_cast<int>(c)), 58);
      EXPECT_EQ(lbp_bin_riu2(static_cast<int>(c)), 9);
    }
  }
  EXPECT_EQ(uniform, 58);
  EXPECT_EQ(riu2_image.size(), 10u);
  EXPECT_EQ(*riu2_image.begin(), 0);
  EXPECT_EQ(*riu2_image.rbegin(), 9);
  EXPECT_EQ(u2_image.size(), 59u);
  EXPECT_EQ(*u2_image.rbegin(), 58);
  EXPECT_EQ(popcount_class[0], 1);
  EXPECT_EQ(popcount_class[8], 1);
  for (int k = 1; k <= 7; ++k) EXPECT_EQ(popcount_class[k], 8) << "popcount " << k;
}

TEST(LbpMap, ConstantChannel) {
  const GrayImage g(12, 9, 140.0);
  const auto riu2 = lbp_map(g, LbpVariant::Riu2P8R1);
  const auto u2 = lbp_map(g, LbpVariant::U2P8R2);
  for (int y = 0; y < 9; ++y) {
    for (int x = 0; x < 12; ++x) {
      if (riu2.valid(x, y)) {
        EXPECT_EQ(riu2.at(x, y), 8);
      }
      if (u2.valid(x, y)) {
        EXPECT_EQ(u2.at(x, y), 57);
      }
    }
  }
  EXPECT_EQ(riu2.at(1, 1), 8);
  EXPECT_FALSE(riu2.valid(0, 4));
  EXPECT_FALSE(u2.valid(1, 4));
}

TEST(LbpMap, FiveByFiveRadiusTwoHasOnlyTheCentre) {
  const GrayImage g(5, 5, 3.0);
  const auto m = lbp_map(g, LbpVariant::U2P8R2);
  int valid = 0;
  for (int y = 0; y < 5; ++y) {
    for (int x = 0; x < 5; ++x) valid += m.valid(x, y);
  }
  EXPECT_EQ(valid, 1);
  EXPECT_TRUE(m.valid(2, 2));
}

TEST(LbpMap, TooSmall) {
  try {
    lbp_map(GrayImage(4, 9, 0.0), LbpVariant::U2P8R2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ImageTooSmall);
  }
}

TEST(LbpVariantNames, RoundTrip) {
  for (auto v : {LbpVariant::Riu2P8R1, LbpVariant::U2P8R2}) {
    EXPECT_EQ(lbp_variant_from_string(to_string(v)), v);
  }
  EXPECT_THROW(lbp_variant_from_string("u2_P8_R3"), Error);
}
