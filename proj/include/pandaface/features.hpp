#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <fstream>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "pandaface/error.hpp"
#include "pandaface/gabor.hpp"
#include "pandaface/image.hpp"
#include "pandaface/json_util.hpp"
#include "pandaface/lbp.hpp"

namespace pandaface {

struct GridSpec {
  std::string name;
  int cols = 1;
  int rows = 1;
  LbpVariant lbp = LbpVariant::U2P8R2;

  int blocks() const { return cols * rows; }
  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// The seven face grids: G1 7×5 and G2 5×7 use riu2 at radius 1, the rest
/// use u2 at radius 2.
inline std::vector<GridSpec> default_grids() {
  return {
      {"G1", 7, 5, LbpVariant::Riu2P8R1}, {"G2", 5, 7, LbpVariant::Riu2P8R1},
      {"G3", 5, 5, LbpVariant::U2P8R2},   {"G4", 4, 3, LbpVariant::U2P8R2},
      {"G5", 3, 4, LbpVariant::U2P8R2},   {"G6", 3, 3, LbpVariant::U2P8R2},
      {"G7", 2, 2, LbpVariant::U2P8R2},
  };
}

struct FeatureConfig {
  std::vector<GridSpec> grids = default_grids();
  GaborParams gabor;

  void validate() const {
    if (grids.empty()) throw Error(ErrorCode::ConfigError, "feature config needs at least one grid");
    for (const auto& g : grids) {
      if (g.cols < 1 || g.rows < 1) {
        throw Error(ErrorCode::ConfigError, "grid " + g.name + " must have cols, rows >= 1");
      }
    }
    gabor.validate();
  }

  friend bool operator==(const FeatureConfig&, const FeatureConfig&) = default;
};

inline void to_json(Json& j, const GridSpec& g) {
  j = Json{{"name", g.name}, {"cols", g.cols}, {"rows", g.rows}, {"lbp", std::string(to_string(g.lbp))}};
}

inline void from_json(const Json& j, GridSpec& g) {
  detail::require_object_with_keys(j, {"name", "cols", "rows", "lbp"}, "grid");
  detail::read_if_present(j, "name", g.name, "grid");
  detail::read_if_present(j, "cols", g.cols, "grid");
  detail::read_if_present(j, "rows", g.rows, "grid");
  if (j.contains("lbp")) g.lbp = lbp_variant_from_string(j.at("lbp").get<std::string>());
}

inline void to_json(Json& j, const GaborParams& p) {
  j = Json{{"wavelengths", p.wavelengths},
           {"num_orientations", p.num_orientations},
           {"sigma_ratio", p.sigma_ratio},
           {"aspect_ratio", p.aspect_ratio}};
}

inline void from_json(const Json& j, GaborParams& p) {
  detail::require_object_with_keys(j, {"wavelengths", "num_orientations", "sigma_ratio", "aspect_ratio"},
                                   "gabor");
  detail::read_if_present(j, "wavelengths", p.wavelengths, "gabor");
  detail::read_if_present(j, "num_orientations", p.num_orientations, "gabor");
  detail::read_if_present(j, "sigma_ratio", p.sigma_ratio, "gabor");
  detail::read_if_present(j, "aspect_ratio", p.aspect_ratio, "gabor");
}

inline void to_json(Json& j, const FeatureConfig& c) {
  j = Json{{"grids", c.grids}, {"gabor", c.gabor}};
}

inline void from_json(const Json& j, FeatureConfig& c) {
  detail::require_object_with_keys(j, {"grids", "gabor"}, "features");
  if (j.contains("grids")) {
    c.grids.clear();
    for (const auto& g : j.at("grids")) c.grids.push_back(g.get<GridSpec>());
  }
  if (j.contains("gabor")) c.gabor = j.at("gabor").get<GaborParams>();
}

/// Half-open pixel rectangle.
struct Block {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
  friend bool operator==(const Block&, const Block&) = default;
};

/// Row-major tiling: block (i, j) spans columns [⌊i·W/cols⌋, ⌊(i+1)·W/cols⌋)
/// and the analogous rows.
inline std::vector<Block> block_partition(int width, int height, int cols, int rows) {
  if (cols < 1 || rows < 1 || cols > width || rows > height) {
    throw Error(ErrorCode::GridTooFine, std::to_string(cols) + "x" + std::to_string(rows) +
                                            " grid does not fit a " + std::to_string(width) +
                                            "x" + std::to_string(height) + " image");
  }
  std::vector<Block> blocks;
  blocks.reserve(static_cast<std::size_t>(cols) * rows);
  for (int j = 0; j < rows; ++j) {
    for (int i = 0; i < cols; ++i) {
      blocks.push_back({static_cast<int>(static_cast<long long>(i) * width / cols),
                        static_cast<int>(static_cast<long long>(j) * height / rows),
                        static_cast<int>(static_cast<long long>(i + 1) * width / cols),
                        static_cast<int>(static_cast<long long>(j + 1) * height / rows)});
    }
  }
  return blocks;
}

/// L1-normalised histogram of the valid bins inside `block`. Map types expose
/// at(x, y) returning a bin index, negative for excluded pixels.
template <typename BinSource>
std::vector<double> block_histogram(const BinSource& map, const Block& block, int num_bins) {
  std::vector<double> hist(static_cast<std::size_t>(num_bins), 0.0);
  std::size_t total = 0;
  for (int y = block.y0; y < block.y1; ++y) {
    for (int x = block.x0; x < block.x1; ++x) {
      const int bin = map.at(x, y);
      if (bin < 0) continue;
      if (bin >= num_bins) throw Error(ErrorCode::OutOfBounds, "bin index exceeds histogram size");
      hist[static_cast<std::size_t>(bin)] += 1.0;
      ++total;
    }
  }
  if (total > 0) {
    const double n = static_cast<double>(total);
    for (auto& v : hist) v /= n;
  }
  return hist;
}

enum class Descriptor : std::uint8_t { LbpRed, LbpGreen, LbpBlue, Gabor };

constexpr std::string_view to_string(Descriptor d) {
  switch (d) {
    case Descriptor::LbpRed: return "lbp_r";
    case Descriptor::LbpGreen: return "lbp_g";
    case Descriptor::LbpBlue: return "lbp_b";
    case Descriptor::Gabor: return "gabor";
  }
  return "?";
}

/// One contiguous histogram inside the feature vector.
struct LayoutSegment {
  int grid = 0;
  int block = 0;
  Descriptor descriptor = Descriptor::Gabor;
  int bins = 0;
  std::size_t offset = 0;
};

struct FeatureCoordinate {
  int grid = 0;
  int block = 0;
  Descriptor descriptor = Descriptor::Gabor;
  int bin = 0;
  friend bool operator==(const FeatureCoordinate&, const FeatureCoordinate&) = default;
};

/// Ordering contract: all LBP histograms first (grids in order, blocks
/// row-major, channels R, G, B), then all Gabor histograms (same grid and
/// block order).
class FeatureLayout {
 public:
  explicit FeatureLayout(const FeatureConfig& config) {
    std::size_t offset = 0;
    for (int g = 0; g < static_cast<int>(config.grids.size()); ++g) {
      const auto& grid = config.grids[g];
      const int bins = lbp_bin_count(grid.lbp);
      for (int b = 0; b < grid.blocks(); ++b) {
        for (auto d : {Descriptor::LbpRed, Descriptor::LbpGreen, Descriptor::LbpBlue}) {
          segments_.push_back({g, b, d, bins, offset});
          offset += static_cast<std::size_t>(bins);
        }
      }
    }
    for (int g = 0; g < static_cast<int>(config.grids.size()); ++g) {
      for (int b = 0; b < config.grids[g].blocks(); ++b) {
        segments_.push_back({g, b, Descriptor::Gabor, config.gabor.num_orientations, offset});
        offset += static_cast<std::size_t>(config.gabor.num_orientations);
      }
    }
    dimension_ = offset;
  }

  std::size_t dimension() const noexcept { return dimension_; }
  const std::vector<LayoutSegment>& segments() const noexcept { return segments_; }

  FeatureCoordinate coordinate(std::size_t i) const {
    if (i >= dimension_) throw Error(ErrorCode::OutOfBounds, "feature index out of range");
    auto it = std::upper_bound(segments_.begin(), segments_.end(), i,
                               [](std::size_t v, const LayoutSegment& s) { return v < s.offset; });
    const auto& s = *std::prev(it);
    return {s.grid, s.block, s.descriptor, static_cast<int>(i - s.offset)};
  }

  Json to_json() const {
    Json segs = Json::array();
    for (const auto& s : segments_) {
      segs.push_back({{"grid", s.grid},
                      {"block", s.block},
                      {"descriptor", std::string(to_string(s.descriptor))},
                      {"bins", s.bins},
                      {"offset", s.offset}});
    }
    return Json{{"dimension", dimension_}, {"segments", std::move(segs)}};
  }

 private:
  std::vector<LayoutSegment> segments_;
  std::size_t dimension_ = 0;
};

struct FeatureVector {
  std::vector<double> values;
  std::shared_ptr<const FeatureLayout> layout;

  std::size_t size() const noexcept { return values.size(); }
};

inline constexpr int kMinFeatureImageSide = 16;

/// Owns the configuration, the layout and the Gabor bank so they are built
/// once and shared across images. All methods are const and thread-safe.
class FeatureExtractor {
 public:
  explicit FeatureExtractor(FeatureConfig config)
      : config_((config.validate(), std::move(config))),
        layout_(std::make_shared<const FeatureLayout>(config_)),
        bank_(config_.gabor) {}

  const FeatureConfig& config() const noexcept { return config_; }
  const std::shared_ptr<const FeatureLayout>& layout() const noexcept { return layout_; }
  const GaborBank& bank() const noexcept { return bank_; }
  std::size_t dimension() const noexcept { return layout_->dimension(); }

  FeatureVector extract(const Image& img) const {
    if (img.width() < kMinFeatureImageSide || img.height() < kMinFeatureImageSide) {
      throw Error(ErrorCode::ImageTooSmall, "feature extraction needs at least 16x16 pixels");
    }
    const int w = img.width();
    const int h = img.height();

    bool need_riu2 = false;
    bool need_u2 = false;
    for (const auto& g : config_.grids) {
      (g.lbp == LbpVariant::Riu2P8R1 ? need_riu2 : need_u2) = true;
    }
    std::array<BinMap, 3> riu2_maps;
    std::array<BinMap, 3> u2_maps;
    for (int c = 0; c < 3; ++c) {
      const GrayImage plane = channel(img, c);
      if (need_riu2) riu2_maps[c] = lbp_map(plane, LbpVariant::Riu2P8R1);
      if (need_u2) u2_maps[c] = lbp_map(plane, LbpVariant::U2P8R2);
    }
    const OrientationField field = gabor_orientation_field(to_grayscale(img), bank_);

    std::vector<std::vector<Block>> partitions;
    partitions.reserve(config_.grids.size());
    for (const auto& g : config_.grids) partitions.push_back(block_partition(w, h, g.cols, g.rows));

    FeatureVector fv;
    fv.layout = layout_;
    fv.values.resize(layout_->dimension());
    for (const auto& seg : layout_->segments()) {
      const Block& block = partitions[seg.grid][seg.block];
      std::vector<double> hist;
      if (seg.descriptor == Descriptor::Gabor) {
        hist = block_histogram(field, block, seg.bins);
      } else {
        const int c = static_cast<int>(seg.descriptor);
        const auto& maps = config_.grids[seg.grid].lbp == LbpVariant::Riu2P8R1 ? riu2_maps : u2_maps;
        hist = block_histogram(maps[c], block, seg.bins);
      }
      std::copy(hist.begin(), hist.end(), fv.values.begin() + static_cast<std::ptrdiff_t>(seg.offset));
    }
    return fv;
  }

 private:
  FeatureConfig config_;
  std::shared_ptr<const FeatureLayout> layout_;
  GaborBank bank_;
};

inline FeatureVector extract_features(const Image& img, const FeatureExtractor& extractor) {
  return extractor.extract(img);
}

inline FeatureVector extract_features(const Image& img, const FeatureConfig& config) {
  return FeatureExtractor(config).extract(img);
}

/// Closed-form dimension: Σ_grids blocks·(3·lbp_bins + orientations).
inline std::size_t feature_dimension(const FeatureConfig& config) {
  std::size_t d = 0;
  for (const auto& g : config.grids) {
    d += static_cast<std::size_t>(g.blocks()) *
         static_cast<std::size_t>(3 * lbp_bin_count(g.lbp) + config.gabor.num_orientations);
  }
  return d;
}

/// Writes `<prefix>.f32` (little-endian float32 values) and `<prefix>.json`
/// (layout sidecar).
inline void write_feature_vector(const FeatureVector& fv, const FeatureConfig& config,
                                 const std::string& prefix) {
  {
    std::ofstream out(prefix + ".f32", std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + prefix + ".f32");
    for (double v : fv.values) {
      const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
      const std::array<char, 4> bytes{static_cast<char>(bits & 0xFF), static_cast<char>((bits >> 8) & 0xFF),
                                      static_cast<char>((bits >> 16) & 0xFF),
                                      static_cast<char>((bits >> 24) & 0xFF)};
      out.write(bytes.data(), 4);
    }
    if (!out) throw Error(ErrorCode::IoError, "failed writing " + prefix + ".f32");
  }
  std::ofstream side(prefix + ".json", std::ios::binary);
  if (!side) throw Error(ErrorCode::IoError, "cannot write " + prefix + ".json");
  Json j = fv.layout ? fv.layout->to_json() : Json::object();
  j["dtype"] = "float32_le";
  j["config"] = config;
  side << j.dump(2) << '\n';
  if (!side) throw Error(ErrorCode::IoError, "failed writing " + prefix + ".json");
}

}  // namespace pandaface
