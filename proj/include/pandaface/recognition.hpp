#pragma once

#include <algorithm>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <spdlog/spdlog.h>

#include "pandaface/alignment.hpp"
#include "pandaface/error.hpp"
#include "pandaface/features.hpp"
#include "pandaface/image.hpp"
#include "pandaface/parallel.hpp"
#include "pandaface/pipeline.hpp"
#include "pandaface/pls.hpp"

namespace pandaface {

struct LabeledImage {
  Image image;
  std::string panda_id;
  std::string path;
};

struct GalleryEntry {
  std::size_t entry_id = 0;
  std::string panda_id;
  KeyPointSet keypoints;
  int target_width = 0;
  int target_height = 0;
  PlsModel model;

  friend bool operator==(const GalleryEntry&, const GalleryEntry&) = default;
};

/// One classifier per enrolled image plus the configuration that built them.
struct Gallery {
  std::vector<GalleryEntry> entries;
  PipelineConfig config;

  std::size_t size() const noexcept { return entries.size(); }

  std::size_t dimension() const {
    return entries.empty() ? 0 : static_cast<std::size_t>(entries.front().model.dimension());
  }

  /// Distinct identities in lexicographic order.
  std::vector<std::string> id_set() const {
    std::set<std::string> ids;
    for (const auto& e : entries) ids.insert(e.panda_id);
    return {ids.begin(), ids.end()};
  }

  friend bool operator==(const Gallery&, const Gallery&) = default;
};

/// Scores of one probe against every gallery entry, in entry order. Entries
/// whose alignment failed score −∞ and carry a message in `failures`.
struct ScoreVector {
  std::vector<double> scores;
  std::vector<std::string> panda_ids;
  std::vector<std::size_t> entry_ids;
  std::vector<std::string> failures;

  std::size_t size() const noexcept { return scores.size(); }
  friend bool operator==(const ScoreVector&, const ScoreVector&) = default;
};

struct IdentityScore {
  std::string panda_id;
  double score = 0.0;
  friend bool operator==(const IdentityScore&, const IdentityScore&) = default;
};

struct Identification {
  std::string panda_id;
  /// Per-identity maxima, sorted by identity.
  std::vector<IdentityScore> per_id;
};

struct Verification {
  bool accept = false;
  double score = 0.0;
};

inline constexpr double kFailedScore = -std::numeric_limits<double>::infinity();

namespace detail {

inline void check_enrolment_input(const std::vector<std::string>& ids) {
  if (ids.size() < 2) throw Error(ErrorCode::InsufficientData, "enrolment needs at least 2 images");
  if (std::set<std::string>(ids.begin(), ids.end()).size() < 2) {
    throw Error(ErrorCode::InsufficientData, "enrolment needs at least 2 distinct identities");
  }
}

/// Keypoints for every image; nullopt where edge extraction failed.
inline std::vector<std::optional<KeyPointSet>> compute_keypoints(
    const std::vector<const Image*>& images, const AlignmentParams& params, unsigned threads) {
  std::vector<std::optional<KeyPointSet>> out(images.size());
  parallel_for(images.size(), threads, [&](std::size_t i) {
    try {
      out[i] = extract_keypoints(*images[i], params);
    } catch (const Error& e) {
      spdlog::warn("keypoint extraction failed for image {}: {}", i, e.what());
    }
  });
  return out;
}

/// Drops images without keypoints, provided each affected identity keeps at
/// least two usable images; otherwise enrolment cannot proceed.
inline std::vector<bool> usable_images(const std::vector<std::optional<KeyPointSet>>& keypoints,
                                       const std::vector<std::string>& ids) {
  std::vector<bool> usable(keypoints.size());
  std::map<std::string, int> remaining;
  for (std::size_t i = 0; i < keypoints.size(); ++i) {
    usable[i] = keypoints[i].has_value();
    if (usable[i]) ++remaining[ids[i]];
  }
  for (std::size_t i = 0; i < keypoints.size(); ++i) {
    if (!usable[i] && remaining[ids[i]] < 2) {
      throw Error(ErrorCode::AlignmentFailure,
                  "image " + std::to_string(i) + " of identity '" + ids[i] +
                      "' has no keypoints and too few usable images remain for that identity");
    }
  }
  std::vector<std::string> kept;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (usable[i]) kept.push_back(ids[i]);
  }
  check_enrolment_input(kept);
  return usable;
}

/// Source image aligned onto a target's keypoints and canvas, then described.
inline std::optional<std::vector<double>> aligned_features(const Image& source,
                                                           const KeyPointSet& source_keypoints,
                                                           const KeyPointSet& target_keypoints,
                                                           int target_width, int target_height,
                                                           const FeatureExtractor& extractor,
                                                           const CpdParams& cpd,
                                                           std::string* failure = nullptr) {
  try {
    const Image warped = align_with_keypoints(source, source_keypoints, target_keypoints,
                                              target_width, target_height, cpd);
    return extractor.extract(warped).values;
  } catch (const Error& e) {
    if (failure) *failure = e.what();
    return std::nullopt;
  }
}

/// One-vs-all PLS fit for the target identity over the available rows, in the
/// order given. Returns nullopt when the rows do not contain both classes.
inline std::optional<PlsModel> fit_entry(const std::vector<const std::vector<double>*>& rows,
                                         const std::vector<std::string>& row_ids,
                                         const std::string& target_id, int n_components) {
  if (rows.size() < 2) return std::nullopt;
  const auto d = static_cast<Eigen::Index>(rows.front()->size());
  Eigen::MatrixXd X(static_cast<Eigen::Index>(rows.size()), d);
  Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
  bool has_positive = false;
  bool has_negative = false;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto row = static_cast<Eigen::Index>(r);
    X.row(row) = Eigen::Map<const Eigen::RowVectorXd>(rows[r]->data(), d);
    const bool positive = row_ids[r] == target_id;
    y(row) = positive ? 1.0 : -1.0;
    (positive ? has_positive : has_negative) = true;
  }
  if (!has_positive || !has_negative) return std::nullopt;
  const int components = std::min<int>(
      n_components, static_cast<int>(std::min<Eigen::Index>(X.rows() - 1, d)));
  return fit_pls(X, y, components);
}

}  // namespace detail

/// One-vs-all enrolment: for every target image, align all images (itself
/// included) to its keypoints, extract features, label its identity +1 and
/// every other identity −1, and fit a PLS classifier.
inline Gallery enroll(const std::vector<LabeledImage>& images, const PipelineConfig& config,
                      unsigned threads = 1) {
  config.validate();
  std::vector<std::string> ids;
  std::vector<const Image*> pixels;
  for (const auto& li : images) {
    ids.push_back(li.panda_id);
    pixels.push_back(&li.image);
  }
  detail::check_enrolment_input(ids);

  const FeatureExtractor extractor(config.features);
  const auto keypoints = detail::compute_keypoints(pixels, config.alignment, threads);
  const auto usable = detail::usable_images(keypoints, ids);

  std::vector<std::optional<GalleryEntry>> slots(images.size());
  parallel_for(images.size(), threads, [&](std::size_t t) {
    if (!usable[t]) return;
    const Image& target = images[t].image;
    std::vector<std::optional<std::vector<double>>> features(images.size());
    for (std::size_t i = 0; i < images.size(); ++i) {
      if (!usable[i]) continue;
      std::string failure;
      features[i] = detail::aligned_features(images[i].image, *keypoints[i], *keypoints[t],
                                             target.width(), target.height(), extractor,
                                             config.alignment.cpd, &failure);
      if (!features[i]) spdlog::warn("skipping image {} for entry {}: {}", i, t, failure);
    }
    std::vector<const std::vector<double>*> rows;
    std::vector<std::string> row_ids;
    for (std::size_t i = 0; i < images.size(); ++i) {
      if (!features[i]) continue;
      rows.push_back(&*features[i]);
      row_ids.push_back(ids[i]);
    }
    auto model = detail::fit_entry(rows, row_ids, ids[t], config.pls_components);
    if (!model) {
      spdlog::warn("skipping entry {}: training rows lack one of the two classes", t);
      return;
    }
    slots[t] = GalleryEntry{t, ids[t], *keypoints[t], target.width(), target.height(),
                            std::move(*model)};
  });

  Gallery gallery;
  gallery.config = config;
  for (auto& s : slots) {
    if (s) gallery.entries.push_back(std::move(*s));
  }
  if (gallery.entries.size() < 2) {
    throw Error(ErrorCode::InsufficientData, "fewer than 2 gallery entries could be trained");
  }
  return gallery;
}

/// Aligns the probe to every entry's keypoints and scores it with that
/// entry's classifier: the diagonal of Xβᵀ.
inline ScoreVector score_probe(const Image& probe, const Gallery& gallery,
                               const FeatureExtractor& extractor, unsigned threads = 1) {
  const std::size_t n = gallery.size();
  ScoreVector out;
  out.scores.assign(n, kFailedScore);
  out.failures.assign(n, "");
  for (const auto& e : gallery.entries) {
    out.panda_ids.push_back(e.panda_id);
    out.entry_ids.push_back(e.entry_id);
  }

  std::optional<KeyPointSet> probe_keypoints;
  try {
    probe_keypoints = extract_keypoints(probe, gallery.config.alignment);
  } catch (const Error& e) {
    out.failures.assign(n, e.what());
    return out;
  }

  parallel_for(n, threads, [&](std::size_t i) {
    const auto& entry = gallery.entries[i];
    auto x = detail::aligned_features(probe, *probe_keypoints, entry.keypoints, entry.target_width,
                                      entry.target_height, extractor, gallery.config.alignment.cpd,
                                      &out.failures[i]);
    if (x) out.scores[i] = pls_predict(entry.model, *x);
  });
  return out;
}

inline ScoreVector score_probe(const Image& probe, const Gallery& gallery, unsigned threads = 1) {
  return score_probe(probe, gallery, FeatureExtractor(gallery.config.features), threads);
}

/// Max score per identity over that identity's entries, sorted by identity.
inline std::vector<IdentityScore> per_identity_scores(const ScoreVector& scores) {
  std::map<std::string, double> best;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    auto [it, inserted] = best.try_emplace(scores.panda_ids[i], scores.scores[i]);
    if (!inserted) it->second = std::max(it->second, scores.scores[i]);
  }
  std::vector<IdentityScore> out;
  for (const auto& [id, s] : best) out.push_back({id, s});
  return out;
}

/// Identities ordered by descending score, ties by ascending identity.
inline std::vector<IdentityScore> rank_identities(std::vector<IdentityScore> per_id) {
  std::stable_sort(per_id.begin(), per_id.end(), [](const IdentityScore& a, const IdentityScore& b) {
    return a.score > b.score || (a.score == b.score && a.panda_id < b.panda_id);
  });
  return per_id;
}

inline Identification identify(const ScoreVector& scores) {
  const bool any_finite = std::any_of(scores.scores.begin(), scores.scores.end(),
                                      [](double s) { return std::isfinite(s); });
  if (!any_finite) throw Error(ErrorCode::NoFiniteScores, "no gallery entry produced a finite score");
  Identification out;
  out.per_id = per_identity_scores(scores);
  out.panda_id = rank_identities(out.per_id).front().panda_id;
  return out;
}

/// Accepts when the claimed identity's best entry score reaches `threshold`.
inline Verification verify(const ScoreVector& scores, const std::string& claimed_id,
                           double threshold) {
  std::optional<double> best;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores.panda_ids[i] != claimed_id) continue;
    best = best ? std::max(*best, scores.scores[i]) : scores.scores[i];
  }
  if (!best) throw Error(ErrorCode::UnknownIdentity, "identity '" + claimed_id + "' is not enrolled");
  return {*best >= threshold, *best};
}

}  // namespace pandaface
