#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "pandaface/error.hpp"
#include "pandaface/image.hpp"

namespace pandaface {

struct KeyPoint {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const KeyPoint&, const KeyPoint&) = default;
};

/// Edge-pixel positions of one image plus the dimensions they were taken from.
struct KeyPointSet {
  std::vector<KeyPoint> points;
  int source_width = 0;
  int source_height = 0;

  std::size_t size() const noexcept { return points.size(); }
  bool empty() const noexcept { return points.empty(); }
  friend bool operator==(const KeyPointSet&, const KeyPointSet&) = default;
};

struct CpdParams {
  double outlier_weight = 0.1;
  int max_iterations = 150;
  double tolerance = 1e-8;
  int max_points = 800;

  void validate() const {
    if (!(outlier_weight >= 0.0 && outlier_weight < 1.0)) {
      throw Error(ErrorCode::ConfigError, "cpd outlier_weight must lie in [0, 1)");
    }
    if (max_iterations < 1) throw Error(ErrorCode::ConfigError, "cpd max_iterations must be >= 1");
    if (!(tolerance > 0.0)) throw Error(ErrorCode::ConfigError, "cpd tolerance must be > 0");
    if (max_points < 10) throw Error(ErrorCode::ConfigError, "cpd max_points must be >= 10");
  }

  friend bool operator==(const CpdParams&, const CpdParams&) = default;
};

struct AlignmentParams {
  double sobel_threshold_frac = 0.25;
  CpdParams cpd;

  void validate() const {
    if (!(sobel_threshold_frac > 0.0 && sobel_threshold_frac <= 1.0)) {
      throw Error(ErrorCode::ConfigError, "sobel_threshold_frac must lie in (0, 1]");
    }
    cpd.validate();
  }

  friend bool operator==(const AlignmentParams&, const AlignmentParams&) = default;
};

struct CpdIteration {
  int iteration = 0;
  double objective = 0.0;
  double sigma2 = 0.0;
};

struct CpdDiagnostics {
  int iterations = 0;
  double sigma2 = 0.0;
  double objective = 0.0;
  std::vector<CpdIteration> trace;
};

struct CpdResult {
  AffineTransform transform;
  CpdDiagnostics diagnostics;
};

/// (Gx, Gy) of the 3x3 Sobel operator at an interior pixel; x grows right,
/// y grows down.
inline std::pair<double, double> sobel_gradient(const GrayImage& img, int x, int y) {
  const double gx = (img.at(x + 1, y - 1) + 2.0 * img.at(x + 1, y) + img.at(x + 1, y + 1)) -
                    (img.at(x - 1, y - 1) + 2.0 * img.at(x - 1, y) + img.at(x - 1, y + 1));
  const double gy = (img.at(x - 1, y + 1) + 2.0 * img.at(x, y + 1) + img.at(x + 1, y + 1)) -
                    (img.at(x - 1, y - 1) + 2.0 * img.at(x, y - 1) + img.at(x + 1, y - 1));
  return {gx, gy};
}

/// 3x3 Sobel magnitude thresholded at `threshold_frac` of the image maximum.
/// The one-pixel frame is never reported. Points come out in raster order.
inline KeyPointSet sobel_edges(const GrayImage& img, double threshold_frac) {
  if (!(threshold_frac > 0.0 && threshold_frac <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "threshold_frac must lie in (0, 1]");
  }
  const int w = img.width();
  const int h = img.height();
  if (w < 3 || h < 3) throw Error(ErrorCode::ImageTooSmall, "sobel needs at least a 3x3 image");

  std::vector<double> magnitude(static_cast<std::size_t>(w) * h, 0.0);
  double max_mag = 0.0;
  for (int y = 1; y < h - 1; ++y) {
    for (int x = 1; x < w - 1; ++x) {
      const auto [gx, gy] = sobel_gradient(img, x, y);
      const double m = std::sqrt(gx * gx + gy * gy);
      magnitude[static_cast<std::size_t>(y) * w + x] = m;
      max_mag = std::max(max_mag, m);
    }
  }
  if (max_mag <= 0.0) throw Error(ErrorCode::EmptyEdgeSet, "image has no gradient");

  KeyPointSet out;
  out.source_width = w;
  out.source_height = h;
  const double threshold = threshold_frac * max_mag;
  for (int y = 1; y < h - 1; ++y) {
    for (int x = 1; x < w - 1; ++x) {
      if (magnitude[static_cast<std::size_t>(y) * w + x] >= threshold) {
        out.points.push_back({static_cast<double>(x), static_cast<double>(y)});
      }
    }
  }
  return out;
}

/// Deterministic, evenly spaced subsample of exactly `max_points` points
/// (taken in (y, x) order) when the set is larger than the cap.
/// `seed` is unused by the deterministic mode.
inline KeyPointSet subsample_keypoints(const KeyPointSet& k, int max_points,
                                       [[maybe_unused]] std::uint64_t seed = 0) {
  if (max_points < 10) throw Error(ErrorCode::InvalidArgument, "max_points must be >= 10");
  if (k.size() <= static_cast<std::size_t>(max_points)) return k;

  std::vector<KeyPoint> sorted = k.points;
  std::stable_sort(sorted.begin(), sorted.end(), [](const KeyPoint& a, const KeyPoint& b) {
    return a.y < b.y || (a.y == b.y && a.x < b.x);
  });
  KeyPointSet out;
  out.source_width = k.source_width;
  out.source_height = k.source_height;
  // Every stride-th point of the (y, x) order; the result may fall short of
  // max_points when |k| is not a multiple of the cap.
  const std::size_t n = sorted.size();
  const std::size_t cap = static_cast<std::size_t>(max_points);
  const std::size_t stride = (n + cap - 1) / cap;
  out.points.reserve(cap);
  for (std::size_t i = 0; i < n; i += stride) out.points.push_back(sorted[i]);
  return out;
}

namespace detail {

inline Eigen::MatrixX2d to_matrix(const KeyPointSet& k) {
  Eigen::MatrixX2d m(k.size(), 2);
  for (std::size_t i = 0; i < k.size(); ++i) {
    m(static_cast<Eigen::Index>(i), 0) = k.points[i].x;
    m(static_cast<Eigen::Index>(i), 1) = k.points[i].y;
  }
  return m;
}

struct Normalization {
  Eigen::RowVector2d mean;
  double scale = 1.0;
};

// Centres the set and scales it to unit RMS distance from the centroid.
inline Normalization normalize_in_place(Eigen::MatrixX2d& pts) {
  Normalization n;
  n.mean = pts.colwise().mean();
  pts.rowwise() -= n.mean;
  n.scale = std::sqrt(pts.squaredNorm() / static_cast<double>(pts.rows()));
  if (!(n.scale > 0.0)) {
    throw Error(ErrorCode::DegenerateGeometry, "all points coincide");
  }
  pts /= n.scale;
  return n;
}

// A 2x2 symmetric PSD matrix is treated as singular when its determinant is
// negligible relative to its squared trace.
inline bool nearly_singular(const Eigen::Matrix2d& m) {
  const double tr = m.trace();
  return !(tr > 0.0) || m.determinant() <= 1e-12 * tr * tr;
}

}  // namespace detail

// Exponents are floored here before exp(); a term of exp(-600) ~ 1e-261 is
// numerically nothing next to the outlier constant, and the floor keeps the
// E-step off the slow subnormal path.
inline constexpr double kCpdExpFloor = -600.0;

// Kernel terms are skipped once everything left out of a posterior column is
// guaranteed to weigh less than 2^-60 of the outlier constant, i.e. below the
// rounding of its denominator.
inline constexpr double kCpdTruncationBits = 60.0;

/// Affine Coherent Point Drift. The source points act as GMM centroids that
/// are moved onto the target points; the returned transform maps source
/// coordinates into the target frame.
inline CpdResult cpd_affine(const KeyPointSet& source, const KeyPointSet& target,
                            const CpdParams& params) {
  params.validate();
  if (source.size() < 3 || target.size() < 3) {
    throw Error(ErrorCode::InvalidArgument, "cpd needs at least 3 points per set");
  }

  Eigen::MatrixX2d Y = detail::to_matrix(source);
  Eigen::MatrixX2d X = detail::to_matrix(target);
  const auto norm_y = detail::normalize_in_place(Y);
  const auto norm_x = detail::normalize_in_place(X);

  const Eigen::Index M = Y.rows();
  const Eigen::Index N = X.rows();
  constexpr double D = 2.0;

  if (detail::nearly_singular(Y.transpose() * Y)) {
    throw Error(ErrorCode::DegenerateGeometry, "source points are collinear");
  }

  Eigen::Matrix2d B = Eigen::Matrix2d::Identity();
  Eigen::RowVector2d t = Eigen::RowVector2d::Zero();
  double sigma2 = (static_cast<double>(M) * X.squaredNorm() +
                   static_cast<double>(N) * Y.squaredNorm() -
                   2.0 * X.colwise().sum().dot(Y.colwise().sum())) /
                  (static_cast<double>(M) * static_cast<double>(N) * D);

  const double w = params.outlier_weight;
  const Eigen::ArrayXd x_sq = X.rowwise().squaredNorm().array();

  CpdDiagnostics diag;
  double previous = std::numeric_limits<double>::quiet_NaN();
  Eigen::ArrayXd column(M);
  Eigen::ArrayXd p1(M);
  Eigen::ArrayXd px0(M);
  Eigen::ArrayXd px1(M);
  // Transformed centroids sorted by x, with accumulators in the same order.
  std::vector<Eigen::Index> order(static_cast<std::size_t>(M));
  Eigen::ArrayXd sx(M), sy(M), sp1(M), spx0(M), spx1(M);

  for (int iter = 0; iter < params.max_iterations; ++iter) {
    const Eigen::MatrixX2d T = (Y * B.transpose()).rowwise() + t;
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::sort(order.begin(), order.end(), [&T](Eigen::Index a, Eigen::Index b) {
      return T(a, 0) < T(b, 0) || (T(a, 0) == T(b, 0) && a < b);
    });
    for (Eigen::Index i = 0; i < M; ++i) {
      sx(i) = T(order[static_cast<std::size_t>(i)], 0);
      sy(i) = T(order[static_cast<std::size_t>(i)], 1);
    }

    // E-step: posterior of centroid m given data point n, with a uniform
    // outlier component of weight w. Columns of the posterior are consumed
    // as they are produced, so only its row sums and P·X are kept.
    const double c = 2.0 * std::numbers::pi * sigma2 * w / (1.0 - w) * static_cast<double>(M) /
                     static_cast<double>(N);
    const double inv_two_sigma2 = -0.5 / sigma2;
    // M terms below exp(-cutoff) sum to less than 2^-bits · c; any centroid
    // further than `band` along x is past the cutoff.
    const double cutoff =
        std::log(static_cast<double>(M) / c) + kCpdTruncationBits * std::numbers::ln2;
    const double band = cutoff < -kCpdExpFloor ? std::sqrt(2.0 * sigma2 * cutoff)
                                               : std::numeric_limits<double>::infinity();
    double objective = 0.0;
    double np = 0.0;
    double x_sq_mass = 0.0;
    Eigen::RowVector2d sum_x = Eigen::RowVector2d::Zero();
    sp1.setZero();
    spx0.setZero();
    spx1.setZero();
    const double* sx_begin = sx.data();
    const double* sx_end = sx_begin + M;
    for (Eigen::Index n = 0; n < N; ++n) {
      const double xn = X(n, 0);
      const double yn = X(n, 1);
      const Eigen::Index lo = std::lower_bound(sx_begin, sx_end, xn - band) - sx_begin;
      const Eigen::Index len = (std::upper_bound(sx_begin, sx_end, xn + band) - sx_begin) - lo;
      auto col = column.head(len);
      col = ((sx.segment(lo, len) - xn).square() + (sy.segment(lo, len) - yn).square()) *
            inv_two_sigma2;
      col = col.max(kCpdExpFloor).exp();
      const double mass = col.sum();
      double denom = mass + c;
      if (denom <= 0.0) denom = std::numeric_limits<double>::min();
      objective -= std::log(denom);
      const double inv = 1.0 / denom;
      sp1.segment(lo, len) += col * inv;
      spx0.segment(lo, len) += col * (xn * inv);
      spx1.segment(lo, len) += col * (yn * inv);
      const double pt1 = mass * inv;
      np += pt1;
      x_sq_mass += pt1 * x_sq(n);
      sum_x += pt1 * X.row(n);
    }
    for (Eigen::Index i = 0; i < M; ++i) {
      const Eigen::Index m = order[static_cast<std::size_t>(i)];
      p1(m) = sp1(i);
      px0(m) = spx0(i);
      px1(m) = spx1(i);
    }
    objective += static_cast<double>(N) * D / 2.0 * std::log(sigma2);
    if (!std::isfinite(objective)) {
      throw Error(ErrorCode::NonFinite, "cpd objective became non-finite");
    }
    diag.trace.push_back({iter, objective, sigma2});
    diag.iterations = iter + 1;
    diag.objective = objective;

    const bool converged =
        iter > 0 && std::abs((objective - previous) / objective) < params.tolerance;
    previous = objective;

    // M-step: closed-form affine update followed by the variance update.
    if (!(np > 0.0)) throw Error(ErrorCode::NonFinite, "cpd posterior mass vanished");
    Eigen::MatrixX2d PX(M, 2);
    PX.col(0) = px0.matrix();
    PX.col(1) = px1.matrix();
    const Eigen::RowVector2d mu_x = sum_x / np;
    const Eigen::RowVector2d mu_y = (Y.transpose() * p1.matrix()).transpose() / np;

    const Eigen::Matrix2d B1 = PX.transpose() * Y - np * mu_x.transpose() * mu_y;
    const Eigen::Matrix2d B2 =
        (Y.array().colwise() * p1).matrix().transpose() * Y - np * mu_y.transpose() * mu_y;
    if (detail::nearly_singular(B2)) {
      throw Error(ErrorCode::DegenerateGeometry, "cpd normal matrix is singular");
    }
    B = B1 * B2.inverse();
    t = mu_x - mu_y * B.transpose();
    sigma2 = std::abs((x_sq_mass - np * mu_x.squaredNorm() -
                       (B1 * B.transpose()).trace()) /
                      (np * D));
    if (!std::isfinite(sigma2) || !B.allFinite() || !t.allFinite()) {
      throw Error(ErrorCode::NonFinite, "cpd parameters became non-finite");
    }
    diag.sigma2 = sigma2;

    if (converged || sigma2 <= 10.0 * std::numeric_limits<double>::epsilon()) break;
  }

  // Undo the normalisation: x = xs·B·(y − ȳ)/ys + xs·t + x̄.
  CpdResult result;
  result.transform.linear = (norm_x.scale / norm_y.scale) * B;
  result.transform.translation = (norm_x.scale * t + norm_x.mean).transpose() -
                                 result.transform.linear * norm_y.mean.transpose();
  result.diagnostics = std::move(diag);
  return result;
}

inline KeyPointSet extract_keypoints(const Image& img, const AlignmentParams& params) {
  return subsample_keypoints(sobel_edges(to_grayscale(img), params.sobel_threshold_frac),
                             params.cpd.max_points);
}

/// Registers `source_keypoints` (taken from i_s) onto k_t and warps i_s onto
/// the target canvas.
inline Image align_with_keypoints(const Image& i_s, const KeyPointSet& source_keypoints,
                                  const KeyPointSet& k_t, int target_width, int target_height,
                                  const CpdParams& params) {
  const CpdResult reg = cpd_affine(source_keypoints, k_t, params);
  return warp_affine_bicubic(i_s, reg.transform, target_width, target_height);
}

/// Sobel keypoints of i_s, CPD onto k_t, bicubic warp onto the target canvas.
inline Image align(const Image& i_s, const KeyPointSet& k_t, int target_width, int target_height,
                   const AlignmentParams& params) {
  return align_with_keypoints(i_s, extract_keypoints(i_s, params), k_t, target_width,
                              target_height, params.cpd);
}

inline void write_keypoints_csv(const KeyPointSet& k, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out << "x,y\n";
  for (const auto& p : k.points) out << p.x << ',' << p.y << '\n';
  if (!out) throw Error(ErrorCode::IoError, "failed writing " + path);
}

inline void write_cpd_trace_csv(const CpdDiagnostics& diag, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out.precision(17);
  out << "iter,objective,sigma2\n";
  for (const auto& it : diag.trace) {
    out << it.iteration << ',' << it.objective << ',' << it.sigma2 << '\n';
  }
  if (!out) throw Error(ErrorCode::IoError, "failed writing " + path);
}

}  // namespace pandaface
