#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>

#include <Eigen/Dense>

#include "pandaface/error.hpp"

namespace pandaface {

/// z-score parameters learned on a training matrix and its response.
struct Standardizer {
  Eigen::VectorXd means;
  Eigen::VectorXd stds;
  double y_mean = 0.0;
  double y_std = 1.0;

  friend bool operator==(const Standardizer& a, const Standardizer& b) {
    return a.means.size() == b.means.size() && a.stds.size() == b.stds.size() &&
           a.means == b.means && a.stds == b.stds && a.y_mean == b.y_mean && a.y_std == b.y_std;
  }
};

struct PlsModel {
  Eigen::VectorXd beta;
  Standardizer standardizer;
  int n_components = 0;

  Eigen::Index dimension() const { return beta.size(); }

  friend bool operator==(const PlsModel& a, const PlsModel& b) {
    return a.beta.size() == b.beta.size() && a.beta == b.beta &&
           a.standardizer == b.standardizer && a.n_components == b.n_components;
  }
};

struct Standardized {
  Eigen::MatrixXd Xz;
  Eigen::VectorXd yz;
  Standardizer standardizer;
};

/// Standard deviations below this are replaced by 1.
inline constexpr double kMinStd = 1e-12;

/// Column-wise z-scoring with the sample (N−1) standard deviation.
inline Standardized standardize_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  const Eigen::Index n = X.rows();
  if (n < 2) throw Error(ErrorCode::InsufficientData, "standardization needs at least 2 rows");
  if (y.size() != n) throw Error(ErrorCode::DimensionMismatch, "X and y row counts differ");

  Standardized out;
  auto& s = out.standardizer;
  s.means = X.colwise().mean().transpose();
  out.Xz = X.rowwise() - s.means.transpose();
  s.stds = (out.Xz.colwise().squaredNorm() / static_cast<double>(n - 1)).cwiseSqrt().transpose();
  for (Eigen::Index d = 0; d < s.stds.size(); ++d) {
    if (!(s.stds(d) >= kMinStd)) s.stds(d) = 1.0;
  }
  out.Xz.array().rowwise() /= s.stds.transpose().array();

  s.y_mean = y.mean();
  out.yz = y.array() - s.y_mean;
  s.y_std = std::sqrt(out.yz.squaredNorm() / static_cast<double>(n - 1));
  if (!(s.y_std >= kMinStd)) s.y_std = 1.0;
  out.yz /= s.y_std;
  return out;
}

struct NipalsResult {
  Eigen::VectorXd beta;
  /// One column per extracted component.
  Eigen::MatrixXd scores;
  int components_used = 0;
};

/// Squared score norm under which the deflated matrix counts as exhausted.
inline constexpr double kNipalsRankTolerance = 1e-12;

/// Single-response NIPALS. Each component takes w ∝ Xᵀy, t = Xw,
/// p = Xᵀt/(tᵀt), q = yᵀt/(tᵀt) and deflates X and y; the coefficients
/// satisfy ŷ = Xz·beta on the undeflated input, beta = W(PᵀW)⁻¹q.
inline NipalsResult pls_nipals(const Eigen::MatrixXd& Xz, const Eigen::VectorXd& yz,
                               int n_components) {
  const Eigen::Index n = Xz.rows();
  const Eigen::Index d = Xz.cols();
  if (yz.size() != n) throw Error(ErrorCode::DimensionMismatch, "X and y row counts differ");
  if (n_components < 1 || n_components > std::min<Eigen::Index>(n - 1, d)) {
    throw Error(ErrorCode::InvalidComponents,
                "n_components=" + std::to_string(n_components) + " outside [1, min(N-1, D)]");
  }

  Eigen::MatrixXd X = Xz;
  Eigen::VectorXd y = yz;
  Eigen::MatrixXd W(d, n_components);
  Eigen::MatrixXd P(d, n_components);
  Eigen::VectorXd q(n_components);
  Eigen::MatrixXd T(n, n_components);

  int used = 0;
  for (int a = 0; a < n_components; ++a) {
    Eigen::VectorXd w = X.transpose() * y;
    const double w_norm = w.norm();
    if (!(w_norm > 0.0)) break;
    w /= w_norm;
    const Eigen::VectorXd t = X * w;
    const double tt = t.squaredNorm();
    if (tt < kNipalsRankTolerance) break;
    const Eigen::VectorXd p = X.transpose() * t / tt;
    const double qa = y.dot(t) / tt;
    X.noalias() -= t * p.transpose();
    y -= qa * t;

    W.col(a) = w;
    P.col(a) = p;
    q(a) = qa;
    T.col(a) = t;
    ++used;
  }

  NipalsResult result;
  result.components_used = used;
  result.scores = T.leftCols(used);
  if (used == 0) {
    result.beta = Eigen::VectorXd::Zero(d);
    return result;
  }
  const Eigen::MatrixXd PtW = P.leftCols(used).transpose() * W.leftCols(used);
  const Eigen::VectorXd c = PtW.partialPivLu().solve(q.head(used));
  result.beta = W.leftCols(used) * c;
  return result;
}

/// Standardizes (X, y) and fits NIPALS coefficients in standardized space.
inline PlsModel fit_pls(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, int n_components) {
  Standardized z = standardize_fit(X, y);
  NipalsResult fit = pls_nipals(z.Xz, z.yz, n_components);
  PlsModel model;
  model.beta = std::move(fit.beta);
  model.standardizer = std::move(z.standardizer);
  model.n_components = fit.components_used;
  return model;
}

/// Score in label units: ((x − means)/stds)·beta·y_std + y_mean.
inline double pls_predict(const PlsModel& model, std::span<const double> x_raw) {
  const auto d = static_cast<std::size_t>(model.beta.size());
  if (x_raw.size() != d) {
    throw Error(ErrorCode::DimensionMismatch, "feature length " + std::to_string(x_raw.size()) +
                                                  " != model dimension " + std::to_string(d));
  }
  const auto& s = model.standardizer;
  double acc = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    acc += (x_raw[i] - s.means(k)) / s.stds(k) * model.beta(k);
  }
  return acc * s.y_std + s.y_mean;
}

}  // namespace pandaface
