#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "pandaface/error.hpp"
#include "pandaface/image.hpp"

namespace pandaface {

struct SynthOptions {
  std::uint64_t seed = 42;
  int ids = 8;
  int per_id = 6;
  int width = 100;
  int height = 100;
  double max_rotation_deg = 10.0;
  double min_scale = 0.9;
  double max_scale = 1.1;
  double max_translation = 5.0;
  double brightness_jitter = 12.0;
  double noise_sigma = 3.0;
  /// Prototypes of different identities must differ by more than this mean
  /// absolute intensity; offending draws are regenerated.
  double min_prototype_separation = 20.0;
};

namespace detail {

// mt19937_64 is fully specified by the standard; the conversions below are
// spelled out so the fixture does not depend on library distribution code.
class FixtureRng {
 public:
  explicit FixtureRng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::mt19937_64 engine_;
};

struct Grating {
  double theta, wavelength, amplitude, phase;
};

struct Blob {
  double cx, cy, rx, ry, angle, level;
};

// Procedural face: a bright ellipse on a darker background carrying an
// identity-specific mix of oriented gratings and dark markings.
struct FacePattern {
  double background = 110.0;
  double face_cx = 50.0, face_cy = 52.0, face_rx = 40.0, face_ry = 43.0;
  double fur = 200.0;
  std::array<double, 3> tint{1.0, 1.0, 1.0};
  std::vector<Grating> gratings;
  std::vector<Blob> blobs;

  double intensity(double x, double y) const {
    const double ex = (x - face_cx) / face_rx;
    const double ey = (y - face_cy) / face_ry;
    if (ex * ex + ey * ey > 1.0) return background;
    double v = fur;
    for (const auto& g : gratings) {
      const double u = x * std::cos(g.theta) + y * std::sin(g.theta);
      v += g.amplitude * std::cos(2.0 * std::numbers::pi * u / g.wavelength + g.phase);
    }
    for (const auto& b : blobs) {
      const double dx = x - b.cx;
      const double dy = y - b.cy;
      const double u = (dx * std::cos(b.angle) + dy * std::sin(b.angle)) / b.rx;
      const double w = (-dx * std::sin(b.angle) + dy * std::cos(b.angle)) / b.ry;
      if (u * u + w * w <= 1.0) v = b.level;
    }
    return v;
  }
};

inline FacePattern random_pattern(FixtureRng& rng, int width, int height) {
  FacePattern p;
  const double sx = width / 100.0;
  const double sy = height / 100.0;
  p.background = rng.uniform(80.0, 140.0);
  p.face_cx = width / 2.0 + rng.uniform(-3.0, 3.0) * sx;
  p.face_cy = height / 2.0 + rng.uniform(-2.0, 4.0) * sy;
  p.face_rx = rng.uniform(34.0, 42.0) * sx;
  p.face_ry = rng.uniform(38.0, 45.0) * sy;
  p.fur = rng.uniform(170.0, 215.0);
  for (auto& t : p.tint) t = rng.uniform(0.88, 1.0);
  const int gratings = 2;
  for (int i = 0; i < gratings; ++i) {
    p.gratings.push_back({rng.uniform(0.0, std::numbers::pi), rng.uniform(5.0, 14.0),
                          rng.uniform(20.0, 40.0), rng.uniform(0.0, 2.0 * std::numbers::pi)});
  }
  // Eye patches, roughly mirrored, then a few free markings.
  const double eye_dx = rng.uniform(12.0, 20.0) * sx;
  const double eye_y = p.face_cy + rng.uniform(-6.0, 4.0) * sy;
  const double eye_rx = rng.uniform(6.0, 10.0) * sx;
  const double eye_ry = rng.uniform(8.0, 13.0) * sy;
  const double tilt = rng.uniform(0.2, 0.7);
  p.blobs.push_back({p.face_cx - eye_dx, eye_y, eye_rx, eye_ry, tilt, rng.uniform(15.0, 50.0)});
  p.blobs.push_back({p.face_cx + eye_dx, eye_y, eye_rx, eye_ry, -tilt, rng.uniform(15.0, 50.0)});
  const int markings = 2 + static_cast<int>(rng.uniform() * 3.0);
  for (int i = 0; i < markings; ++i) {
    p.blobs.push_back({p.face_cx + rng.uniform(-28.0, 28.0) * sx,
                       p.face_cy + rng.uniform(-30.0, 30.0) * sy, rng.uniform(3.0, 9.0) * sx,
                       rng.uniform(3.0, 9.0) * sy, rng.uniform(0.0, std::numbers::pi),
                       rng.uniform(10.0, 70.0)});
  }
  return p;
}

inline std::uint8_t quantize(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
}

// Renders the pattern seen through `view` (pattern coordinates → image
// coordinates) with an intensity offset and optional pixel noise.
inline Image render_pattern(const FacePattern& p, const AffineTransform& view, int width, int height,
                            double offset, double noise_sigma, FixtureRng* rng) {
  const AffineTransform inv = view.inverse();
  Image img(width, height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const Eigen::Vector2d s = inv.apply(Eigen::Vector2d(x, y));
      const double base = p.intensity(s.x(), s.y()) + offset;
      for (int c = 0; c < 3; ++c) {
        const double noise = rng && noise_sigma > 0.0 ? noise_sigma * rng->normal() : 0.0;
        img.at(x, y, c) = quantize(base * p.tint[c] + noise);
      }
    }
  }
  return img;
}

inline double mean_abs_difference(const Image& a, const Image& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) {
    acc += std::abs(static_cast<double>(a.data()[i]) - static_cast<double>(b.data()[i]));
  }
  return acc / static_cast<double>(a.data().size());
}

}  // namespace detail

struct SynthSample {
  Image image;
  std::string panda_id;
  std::string file_name;
};

struct SynthDataset {
  std::vector<Image> prototypes;
  std::vector<SynthSample> samples;
};

inline std::string synth_identity_name(int k) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "P%02d", k);
  return buf;
}

/// Identity-seeded procedural faces, each sample seen through a small random
/// similarity transform with brightness jitter and pixel noise.
inline SynthDataset generate_synthetic(const SynthOptions& o) {
  if (o.ids < 1 || o.per_id < 1) throw Error(ErrorCode::InvalidArgument, "ids and per_id must be >= 1");
  if (o.width < 16 || o.height < 16) throw Error(ErrorCode::InvalidArgument, "fixture images must be >= 16 px");

  detail::FixtureRng rng(o.seed);
  std::vector<detail::FacePattern> patterns;
  SynthDataset out;
  for (int k = 0; k < o.ids; ++k) {
    for (int attempt = 0;; ++attempt) {
      auto pattern = detail::random_pattern(rng, o.width, o.height);
      Image proto = detail::render_pattern(pattern, AffineTransform::identity(), o.width, o.height,
                                           0.0, 0.0, nullptr);
      const bool separated = std::all_of(out.prototypes.begin(), out.prototypes.end(), [&](const Image& other) {
        return detail::mean_abs_difference(proto, other) > o.min_prototype_separation;
      });
      if (separated || attempt >= 1000) {
        patterns.push_back(std::move(pattern));
        out.prototypes.push_back(std::move(proto));
        break;
      }
    }
  }

  const Eigen::Vector2d center(o.width / 2.0, o.height / 2.0);
  for (int k = 0; k < o.ids; ++k) {
    for (int j = 0; j < o.per_id; ++j) {
      const double angle = rng.uniform(-o.max_rotation_deg, o.max_rotation_deg) * std::numbers::pi / 180.0;
      const double scale = rng.uniform(o.min_scale, o.max_scale);
      const Eigen::Vector2d shift(rng.uniform(-o.max_translation, o.max_translation),
                                  rng.uniform(-o.max_translation, o.max_translation));
      AffineTransform view;
      view.linear << scale * std::cos(angle), -scale * std::sin(angle), scale * std::sin(angle),
          scale * std::cos(angle);
      view.translation = center - view.linear * center + shift;
      const double offset = rng.uniform(-o.brightness_jitter, o.brightness_jitter);
      Image img = detail::render_pattern(patterns[static_cast<std::size_t>(k)], view, o.width, o.height,
                                         offset, o.noise_sigma, &rng);
      char name[48];
      std::snprintf(name, sizeof name, "%s_%02d.png", synth_identity_name(k).c_str(), j);
      out.samples.push_back({std::move(img), synth_identity_name(k), name});
    }
  }
  return out;
}

}  // namespace pandaface
