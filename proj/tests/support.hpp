#pragma once

// Shared generators for the unit and acceptance tests.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "pandaface/alignment.hpp"
#include "pandaface/image.hpp"

namespace pandaface::testing {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int integer(int lo, int hi) { return lo + static_cast<int>(uniform() * (hi - lo + 1)); }
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * uniform());
  }

 private:
  std::mt19937_64 engine_;
};

// Lopsided mixture of anisotropic clusters: no rotational or mirror symmetry
// for CPD to get trapped in.
inline KeyPointSet cluster_cloud(Rng& rng, int n) {
  struct Cluster {
    double cx, cy, sx, sy, weight;
  };
  const std::vector<Cluster> clusters{{20, 25, 9, 4, 0.35}, {70, 30, 5, 12, 0.25},
                                      {45, 75, 14, 6, 0.25}, {85, 85, 3, 3, 0.15}};
  KeyPointSet k;
  k.source_width = 100;
  k.source_height = 100;
  for (int i = 0; i < n; ++i) {
    double u = rng.uniform();
    std::size_t c = 0;
    while (c + 1 < clusters.size() && u > clusters[c].weight) u -= clusters[c++].weight;
    const auto& cl = clusters[c];
    k.points.push_back({cl.cx + cl.sx * rng.normal(), cl.cy + cl.sy * rng.normal()});
  }
  return k;
}

// Noisy closed contour with a lopsided radius profile, the shape edge
// keypoints actually take.
inline KeyPointSet contour_cloud(Rng& rng, int n) {
  KeyPointSet k;
  k.source_width = 100;
  k.source_height = 100;
  for (int i = 0; i < n; ++i) {
    const double t = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double r = 30.0 * (1.0 + 0.35 * std::cos(2.0 * t + 0.4) + 0.25 * std::sin(3.0 * t) +
                             0.1 * std::cos(5.0 * t + 1.0));
    k.points.push_back({50.0 + r * std::cos(t) + 0.5 * rng.normal(), 50.0 + r * std::sin(t) + 0.5 * rng.normal()});
  }
  return k;
}

inline KeyPointSet transform_points(const KeyPointSet& k, const AffineTransform& xf) {
  KeyPointSet out = k;
  for (auto& p : out.points) {
    const auto q = xf.apply(Eigen::Vector2d(p.x, p.y));
    p = {q.x(), q.y()};
  }
  return out;
}

inline double max_residual(const KeyPointSet& source, const AffineTransform& truth,
                           const AffineTransform& estimate) {
  double worst = 0.0;
  for (const auto& p : source.points) {
    const Eigen::Vector2d v(p.x, p.y);
    worst = std::max(worst, (truth.apply(v) - estimate.apply(v)).norm());
  }
  return worst;
}

// Random affine map: rotation within ±max_rot, independent axis scales chosen
// so |det| lands in [0.5, 2], a mild shear, and a bounded translation.
inline AffineTransform random_affine(Rng& rng, double max_rot_deg, double max_shift) {
  const double a = rng.uniform(-max_rot_deg, max_rot_deg) * std::numbers::pi / 180.0;
  const double target_det = std::exp(rng.uniform(std::log(0.5), std::log(2.0)));
  const double aspect = rng.uniform(0.8, 1.25);
  const double sx = std::sqrt(target_det * aspect);
  const double sy = std::sqrt(target_det / aspect);
  const double shear = rng.uniform(-0.15, 0.15);
  Eigen::Matrix2d R;
  R << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
  Eigen::Matrix2d S;
  S << sx, shear * sx, 0.0, sy;
  AffineTransform t;
  t.linear = R * S;
  t.translation << rng.uniform(-max_shift, max_shift), rng.uniform(-max_shift, max_shift);
  return t;
}

// Smooth, aperiodic colour texture with a few sharp-edged dark patches, so
// Sobel finds well-spread keypoints.
inline Image textured_image(int w, int h, std::uint64_t seed = 7) {
  Rng rng(seed);
  struct Wave {
    double fx, fy, phase, amp;
  };
  std::vector<Wave> waves;
  for (int i = 0; i < 5; ++i) {
    const double angle = rng.uniform(0.0, std::numbers::pi);
    const double freq = 2.0 * std::numbers::pi / rng.uniform(9.0, 30.0);
    waves.push_back({freq * std::cos(angle), freq * std::sin(angle), rng.uniform(0.0, 6.28),
                     rng.uniform(10.0, 25.0)});
  }
  struct Patch {
    double cx, cy, r;
  };
  std::vector<Patch> patches;
  for (int i = 0; i < 4; ++i) {
    patches.push_back({rng.uniform(0.2, 0.8) * w, rng.uniform(0.2, 0.8) * h, rng.uniform(5.0, 11.0)});
  }
  Image img(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double v = 150.0;
      for (const auto& wv : waves) v += wv.amp * std::sin(wv.fx * x + wv.fy * y + wv.phase);
      for (const auto& p : patches) {
        if (std::hypot(x - p.cx, y - p.cy) < p.r) v = 30.0;
      }
      for (int c = 0; c < 3; ++c) {
        img.at(x, y, c) = static_cast<std::uint8_t>(std::lround(std::clamp(v - 8.0 * c, 0.0, 255.0)));
      }
    }
  }
  return img;
}

// Sinusoidal grating whose intensity varies along direction theta.
inline GrayImage grating(int w, int h, double theta, double wavelength, double phase = 0.3) {
  GrayImage g(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double u = x * std::cos(theta) + y * std::sin(theta);
      g.at(x, y) = 128.0 + 100.0 * std::cos(2.0 * std::numbers::pi * u / wavelength + phase);
    }
  }
  return g;
}

}  // namespace pandaface::testing
