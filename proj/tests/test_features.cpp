#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "pandaface/features.hpp"
#include "support.hpp"

using namespace pandaface;

namespace {

struct ConstantBins {
  int value;
  int at(int, int) const { return value; }
};

struct TableBins {
  int width;
  std::vector<int> bins;
  int at(int x, int y) const { return bins[static_cast<std::size_t>(y) * width + x]; }
};

const FeatureExtractor& default_extractor() {
  static const FeatureExtractor fx{FeatureConfig{}};
  return fx;
}

}  // namespace

TEST(Grids, DefaultTable) {
  const auto grids = default_grids();
  ASSERT_EQ(grids.size(), 7u);
  const std::vector<std::tuple<int, int, LbpVariant>> expected{
      {7, 5, LbpVariant::Riu2P8R1}, {5, 7, LbpVariant::Riu2P8R1}, {5, 5, LbpVariant::U2P8R2},
      {4, 3, LbpVariant::U2P8R2},   {3, 4, LbpVariant::U2P8R2},   {3, 3, LbpVariant::U2P8R2},
      {2, 2, LbpVariant::U2P8R2}};
  for (std::size_t i = 0; i < grids.size(); ++i) {
    EXPECT_EQ(grids[i].cols, std::get<0>(expected[i]));
    EXPECT_EQ(grids[i].rows, std::get<1>(expected[i]));
    EXPECT_EQ(grids[i].lbp, std::get<2>(expected[i]));
    EXPECT_EQ(grids[i].name, "G" + std::to_string(i + 1));
  }
  EXPECT_EQ(grids[0].blocks(), 35);
}

TEST(BlockPartition, Examples) {
  const auto quads = block_partition(100, 100, 2, 2);
  ASSERT_EQ(quads.size(), 4u);
  for (const auto& b : quads) {
    EXPECT_EQ(b.width(), 50);
    EXPECT_EQ(b.height(), 50);
  }
  const auto cols = block_partition(103, 10, 5, 1);
  std::vector<int> widths;
  for (const auto& b : cols) widths.push_back(b.width());
  EXPECT_EQ(widths, (std::vector<int>{20, 21, 20, 21, 21}));
  EXPECT_EQ(block_partition(100, 100, 7, 5).size(), 35u);
}

TEST(BlockPartition, TilesExactlyAndRowMajor) {
  for (auto [w, h, c, r] : {std::tuple{100, 100, 7, 5}, {97, 61, 4, 3}, {13, 17, 13, 1}}) {
    const auto blocks = block_partition(w, h, c, r);
    std::vector<int> cover(static_cast<std::size_t>(w) * h, 0);
    for (const auto& b : blocks) {
      for (int y = b.y0; y < b.y1; ++y) {
        for (int x = b.x0; x < b.x1; ++x) ++cover[static_cast<std::size_t>(y) * w + x];
      }
    }
    for (int v : cover) EXPECT_EQ(v, 1);
    EXPECT_EQ(blocks[1].y0, 0);
    if (r > 1) {
      EXPECT_EQ(blocks[static_cast<std::size_t>(c)].x0, 0);
      EXPECT_GT(blocks[static_cast<std::size_t>(c)].y0, 0);
    }
  }
}

TEST(BlockPartition, GridTooFine) {
  try {
    block_partition(4, 10, 5, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::GridTooFine);
  }
}

TEST(BlockHistogram, OneHotAndEmpty) {
  const auto h = block_histogram(ConstantBins{3}, Block{0, 0, 8, 8}, 10);
  for (int i = 0; i < 10; ++i) EXPECT_DOUBLE_EQ(h[i], i == 3 ? 1.0 : 0.0);
  const auto empty = block_histogram(ConstantBins{-1}, Block{0, 0, 8, 8}, 10);
  for (double v : empty) EXPECT_EQ(v, 0.0);
}

TEST(BlockHistogram, UniformRandomBins) {
  pandaface::testing::Rng rng(2024);
  TableBins map{200, {}};
  for (int i = 0; i < 200 * 200; ++i) map.bins.push_back(rng.integer(0, 15));
  const auto h = block_histogram(map, Block{0, 0, 200, 200}, 16);
  for (double v : h) EXPECT_NEAR(v, 0.0625, 0.02);
  EXPECT_NEAR(std::accumulate(h.begin(), h.end(), 0.0), 1.0, 1e-12);
}

TEST(FeatureLayout, DefaultDimension) {
  const FeatureConfig config;
  EXPECT_EQ(feature_dimension(config), 15186u);
  EXPECT_EQ(FeatureLayout(config).dimension(), 15186u);
  EXPECT_EQ(70u * 30u + 62u * 177u + 132u * 16u, 15186u);
}

TEST(FeatureLayout, IndependentWalk) {
  const FeatureConfig config;
  const FeatureLayout layout(config);
  std::size_t i = 0;
  for (int g = 0; g < 7; ++g) {
    const int bins = lbp_bin_count(config.grids[g].lbp);
    for (int b = 0; b < config.grids[g].blocks(); ++b) {
      for (auto d : {Descriptor::LbpRed, Descriptor::LbpGreen, Descriptor::LbpBlue}) {
        for (int k = 0; k < bins; ++k, ++i) ASSERT_EQ(layout.coordinate(i), (FeatureCoordinate{g, b, d, k}));
      }
    }
  }
  for (int g = 0; g < 7; ++g) {
    for (int b = 0; b < config.grids[g].blocks(); ++b) {
      for (int k = 0; k < 16; ++k, ++i) ASSERT_EQ(layout.coordinate(i), (FeatureCoordinate{g, b, Descriptor::Gabor, k}));
    }
  }
  EXPECT_EQ(i, layout.dimension());
  EXPECT_THROW(layout.coordinate(i), Error);
}

TEST(Features, ConstantImageHistograms) {
  const auto& fx = default_extractor();
  const auto fv = fx.extract(Image(100, 100, 128));
  ASSERT_EQ(fv.size(), 15186u);
  for (const auto& seg : fx.layout()->segments()) {
    const int hot = seg.descriptor == Descriptor::Gabor ? 0 : (seg.bins == 10 ? 8 : 57);
    for (int k = 0; k < seg.bins; ++k) {
      EXPECT_EQ(fv.values[seg.offset + static_cast<std::size_t>(k)], k == hot ? 1.0 : 0.0);
    }
  }
}

TEST(Features, HistogramsSumToOneAndDeterministic) {
  const auto& fx = default_extractor();
  const auto img = pandaface::testing::textured_image(100, 100, 17);
  const auto a = fx.extract(img);
  EXPECT_EQ(a.values, fx.extract(img).values);
  EXPECT_EQ(a.values, extract_features(img, FeatureConfig{}).values);
  for (const auto& seg : fx.layout()->segments()) {
    double sum = 0.0;
    for (int k = 0; k < seg.bins; ++k) {
      const double v = a.values[seg.offset + static_cast<std::size_t>(k)];
      EXPECT_GE(v, 0.0);
      sum += v;
    }
    EXPECT_NEAR(sum, 1.0, 1e-9);
  }
}

TEST(Features, NonSquareImage) {
  const auto fv = default_extractor().extract(pandaface::testing::textured_image(137, 100, 4));
  EXPECT_EQ(fv.size(), 15186u);
}

TEST(Features, TooSmall) {
  try {
    default_extractor().extract(Image(15, 100, 0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ImageTooSmall);
  }
}

TEST(FeatureConfig, JsonRoundTripAndStrictKeys) {
  FeatureConfig c;
  c.grids.pop_back();
  c.gabor.wavelengths = {3.0, 6.0};
  const Json j = c;
  EXPECT_EQ(j.get<FeatureConfig>().grids.size(), 6u);
  EXPECT_EQ(Json(j.get<FeatureConfig>()), j);
  Json bad = j;
  bad["gabor"]["sigma_ration"] = 0.5;
  EXPECT_THROW(bad.get<FeatureConfig>(), Error);
}

TEST(Features, SmallerConfigDimension) {
  FeatureConfig c;
  c.grids = {{"A", 2, 2, LbpVariant::Riu2P8R1}, {"B", 1, 1, LbpVariant::U2P8R2}};
  c.gabor.num_orientations = 8;
  EXPECT_EQ(feature_dimension(c), 4u * (30 + 8) + 1u * (177 + 8));
  const auto fv = extract_features(pandaface::testing::textured_image(70, 70), c);
  EXPECT_EQ(fv.size(), feature_dimension(c));
}
