#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pandaface/csv.hpp"
#include "pandaface/error.hpp"
#include "pandaface/json_util.hpp"
#include "pandaface/parallel.hpp"
#include "pandaface/recognition.hpp"

namespace pandaface {

struct RocPoint {
  double far = 0.0;
  double tar = 0.0;
  friend bool operator==(const RocPoint&, const RocPoint&) = default;
};

struct ProbeResult {
  std::size_t index = 0;
  std::string path;
  std::string true_id;
  /// Scores against the fold's gallery; entry_ids are dataset indices.
  ScoreVector scores;
  /// Per-identity maxima over the full identity set (−∞ where an identity had
  /// no usable entry), sorted by identity.
  std::vector<IdentityScore> per_id;
  std::string predicted;
  /// 1-based position of the true identity in the identification ranking.
  int true_rank = 0;
};

struct EvaluationResult {
  std::vector<ProbeResult> probes;
  std::vector<std::string> id_set;
  std::vector<double> genuine;
  std::vector<double> impostor;
  std::vector<RocPoint> roc;
  double tar_at_far_1pct = 0.0;
  /// rank_accuracies[k - 1] is the rank-k identification rate.
  std::vector<double> rank_accuracies;
};

struct EvaluationOptions {
  unsigned threads = 1;
  /// Reuse each pairwise alignment (and its features) across folds instead of
  /// re-enrolling from scratch for every probe. Results are identical.
  bool cache_alignments = false;
};

/// Sweeps every observed score (plus ±∞) as an acceptance threshold τ:
/// TAR = #genuine ≥ τ / #genuine, FAR = #impostor ≥ τ / #impostor. Points are
/// sorted by FAR with equal-FAR points collapsed to their best TAR.
inline std::vector<RocPoint> roc_curve(const std::vector<double>& genuine,
                                       const std::vector<double>& impostor) {
  if (genuine.empty() || impostor.empty()) {
    throw Error(ErrorCode::EmptyScores, "roc needs genuine and impostor scores");
  }
  std::vector<double> g = genuine;
  std::vector<double> im = impostor;
  std::sort(g.begin(), g.end());
  std::sort(im.begin(), im.end());

  std::vector<double> thresholds = g;
  thresholds.insert(thresholds.end(), im.begin(), im.end());
  thresholds.push_back(std::numeric_limits<double>::infinity());
  thresholds.push_back(-std::numeric_limits<double>::infinity());
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  const auto at_least = [](const std::vector<double>& sorted, double tau) {
    return static_cast<double>(sorted.end() - std::lower_bound(sorted.begin(), sorted.end(), tau));
  };
  std::vector<RocPoint> points;
  points.reserve(thresholds.size());
  for (double tau : thresholds) {
    points.push_back({at_least(im, tau) / static_cast<double>(im.size()),
                      at_least(g, tau) / static_cast<double>(g.size())});
  }
  std::sort(points.begin(), points.end(), [](const RocPoint& a, const RocPoint& b) {
    return a.far < b.far || (a.far == b.far && a.tar < b.tar);
  });
  std::vector<RocPoint> collapsed;
  for (const auto& p : points) {
    if (!collapsed.empty() && collapsed.back().far == p.far) {
      collapsed.back().tar = std::max(collapsed.back().tar, p.tar);
    } else {
      collapsed.push_back(p);
    }
  }
  return collapsed;
}

/// Step-function read-out: TAR at the largest FAR not exceeding the target.
inline double tar_at_far(const std::vector<RocPoint>& roc, double far_target) {
  if (!(far_target >= 0.0 && far_target <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "far target must lie in [0, 1]");
  }
  std::optional<RocPoint> best;
  for (const auto& p : roc) {
    if (p.far > far_target) continue;
    if (!best || p.far > best->far || (p.far == best->far && p.tar > best->tar)) best = p;
  }
  return best ? best->tar : 0.0;
}

/// rank-k accuracy for k = 1..max_rank.
inline std::vector<double> rank_accuracy(const std::vector<ProbeResult>& probes, int max_rank) {
  if (max_rank < 1) throw Error(ErrorCode::InvalidArgument, "max_rank must be >= 1");
  std::vector<double> acc(static_cast<std::size_t>(max_rank), 0.0);
  if (probes.empty()) return acc;
  for (int k = 1; k <= max_rank; ++k) {
    const auto hits = std::count_if(probes.begin(), probes.end(),
                                    [k](const ProbeResult& p) { return p.true_rank <= k; });
    acc[static_cast<std::size_t>(k - 1)] = static_cast<double>(hits) / static_cast<double>(probes.size());
  }
  return acc;
}

namespace detail {

inline void check_closed_set(const std::vector<std::string>& ids) {
  std::map<std::string, int> counts;
  for (const auto& id : ids) ++counts[id];
  for (const auto& [id, n] : counts) {
    if (n < 2) {
      throw Error(ErrorCode::ClosedSetViolation,
                  "identity '" + id + "' has a single image; leave-one-out needs at least 2");
    }
  }
}

// Fills the per-identity view, genuine/impostor split and rank of one probe.
inline void finish_probe(ProbeResult& p, const std::vector<std::string>& id_set) {
  std::map<std::string, double> best;
  for (const auto& id : id_set) best[id] = kFailedScore;
  for (const auto& s : per_identity_scores(p.scores)) best[s.panda_id] = s.score;
  p.per_id.clear();
  for (const auto& [id, s] : best) p.per_id.push_back({id, s});
  const auto ranked = rank_identities(p.per_id);
  p.predicted = ranked.front().panda_id;
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    if (ranked[i].panda_id == p.true_id) p.true_rank = static_cast<int>(i + 1);
  }
}

struct PairFeatures {
  std::optional<std::vector<double>> values;
  std::string failure;
};

inline std::vector<ProbeResult> leave_one_out_fresh(const std::vector<LabeledImage>& dataset,
                                                    const PipelineConfig& config,
                                                    const FeatureExtractor& extractor,
                                                    unsigned threads) {
  const std::size_t n = dataset.size();
  std::vector<ProbeResult> probes(n);
  parallel_for(n, threads, [&](std::size_t q) {
    std::vector<LabeledImage> others;
    others.reserve(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
      if (i != q) others.push_back(dataset[i]);
    }
    const Gallery gallery = enroll(others, config, 1);
    ProbeResult& p = probes[q];
    p.index = q;
    p.path = dataset[q].path;
    p.true_id = dataset[q].panda_id;
    p.scores = score_probe(dataset[q].image, gallery, extractor, 1);
    for (auto& id : p.scores.entry_ids) id = id < q ? id : id + 1;
  });
  return probes;
}

// Target-major evaluation: the alignment of image i onto target t does not
// depend on the fold, so each (i, t) feature vector is computed once and each
// fold's classifiers are refit from the cached rows with the probe removed.
inline std::vector<ProbeResult> leave_one_out_cached(const std::vector<LabeledImage>& dataset,
                                                     const PipelineConfig& config,
                                                     const FeatureExtractor& extractor,
                                                     unsigned threads) {
  const std::size_t n = dataset.size();
  std::vector<std::string> ids;
  std::vector<const Image*> pixels;
  for (const auto& li : dataset) {
    ids.push_back(li.panda_id);
    pixels.push_back(&li.image);
  }
  const auto keypoints = compute_keypoints(pixels, config.alignment, threads);

  // Replays enrolment's usable-image rule for every fold so the cached path
  // fails exactly where re-enrolment would.
  for (std::size_t q = 0; q < n; ++q) {
    std::vector<std::optional<KeyPointSet>> fold_kp;
    std::vector<std::string> fold_ids;
    for (std::size_t i = 0; i < n; ++i) {
      if (i == q) continue;
      fold_kp.push_back(keypoints[i]);
      fold_ids.push_back(ids[i]);
    }
    usable_images(fold_kp, fold_ids);
  }

  // Indexed [t][q]: each target's worker only writes its own row.
  struct FoldScore {
    bool has_model = false;
    std::optional<double> score;
    std::string failure;
  };
  std::vector<std::vector<FoldScore>> by_target(n, std::vector<FoldScore>(n));

  parallel_for(n, threads, [&](std::size_t t) {
    if (!keypoints[t]) return;
    const Image& target = dataset[t].image;
    std::vector<PairFeatures> cache(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (!keypoints[i]) continue;
      cache[i].values = aligned_features(dataset[i].image, *keypoints[i], *keypoints[t],
                                         target.width(), target.height(), extractor,
                                         config.alignment.cpd, &cache[i].failure);
    }
    for (std::size_t q = 0; q < n; ++q) {
      if (q == t) continue;
      std::vector<const std::vector<double>*> rows;
      std::vector<std::string> row_ids;
      for (std::size_t i = 0; i < n; ++i) {
        if (i == q || !cache[i].values) continue;
        rows.push_back(&*cache[i].values);
        row_ids.push_back(ids[i]);
      }
      const auto model = fit_entry(rows, row_ids, ids[t], config.pls_components);
      if (!model) continue;
      FoldScore& slot = by_target[t][q];
      slot.has_model = true;
      if (!keypoints[q]) continue;
      if (cache[q].values) {
        slot.score = pls_predict(*model, *cache[q].values);
      } else {
        slot.failure = cache[q].failure;
      }
    }
  });

  std::vector<ProbeResult> probes(n);
  for (std::size_t q = 0; q < n; ++q) {
    ProbeResult& p = probes[q];
    p.index = q;
    p.path = dataset[q].path;
    p.true_id = ids[q];
    std::string probe_failure;
    if (!keypoints[q]) {
      try {
        extract_keypoints(dataset[q].image, config.alignment);
      } catch (const Error& e) {
        probe_failure = e.what();
      }
    }
    std::size_t entries = 0;
    for (std::size_t t = 0; t < n; ++t) {
      const FoldScore& slot = by_target[t][q];
      if (t == q || !slot.has_model) continue;
      ++entries;
      p.scores.scores.push_back(slot.score ? *slot.score : kFailedScore);
      p.scores.panda_ids.push_back(ids[t]);
      p.scores.entry_ids.push_back(t);
      p.scores.failures.push_back(keypoints[q] ? slot.failure : probe_failure);
    }
    if (entries < 2) {
      throw Error(ErrorCode::InsufficientData, "fewer than 2 gallery entries could be trained");
    }
  }
  return probes;
}

}  // namespace detail

/// Closed-set leave-one-out: every image in turn is the probe against a
/// gallery enrolled from all the other images.
inline EvaluationResult leave_one_out(const std::vector<LabeledImage>& dataset,
                                      const PipelineConfig& config,
                                      const EvaluationOptions& options = {}) {
  config.validate();
  std::vector<std::string> ids;
  for (const auto& li : dataset) ids.push_back(li.panda_id);
  detail::check_closed_set(ids);
  detail::check_enrolment_input(ids);

  const FeatureExtractor extractor(config.features);
  EvaluationResult result;
  result.probes = options.cache_alignments
                      ? detail::leave_one_out_cached(dataset, config, extractor, options.threads)
                      : detail::leave_one_out_fresh(dataset, config, extractor, options.threads);

  const std::set<std::string> unique(ids.begin(), ids.end());
  result.id_set.assign(unique.begin(), unique.end());
  for (auto& p : result.probes) {
    detail::finish_probe(p, result.id_set);
    for (const auto& s : p.per_id) {
      (s.panda_id == p.true_id ? result.genuine : result.impostor).push_back(s.score);
    }
  }
  result.roc = roc_curve(result.genuine, result.impostor);
  result.tar_at_far_1pct = tar_at_far(result.roc, 0.01);
  result.rank_accuracies = rank_accuracy(result.probes, static_cast<int>(result.id_set.size()));
  return result;
}

namespace detail {

inline std::string format_real(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline Json json_real(double v) {
  return std::isfinite(v) ? Json(v) : Json(format_real(v));
}

}  // namespace detail

struct ReportOptions {
  /// Additional FAR operating points reported next to 1%.
  std::vector<double> extra_fars;
  Json config = Json::object();
  double wall_time_s = 0.0;
};

inline std::string config_hash(const Json& config) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(detail::fnv1a64(config.dump())));
  return buf;
}

inline Json evaluation_summary(const EvaluationResult& r, const ReportOptions& options) {
  Json s;
  s["tar_at_far_1pct"] = r.tar_at_far_1pct;
  Json fars = Json::object();
  for (double f : options.extra_fars) fars[detail::format_real(f)] = tar_at_far(r.roc, f);
  s["tar_at_far"] = fars;
  for (int k = 1; k <= 5; ++k) {
    const double acc = k <= static_cast<int>(r.rank_accuracies.size())
                           ? r.rank_accuracies[static_cast<std::size_t>(k - 1)]
                           : (r.probes.empty() ? 0.0 : 1.0);
    s["rank_" + std::to_string(k)] = acc;
  }
  std::size_t classifiers = r.probes.empty() ? 0 : r.probes.front().scores.size();
  s["counts"] = Json{{"probes", r.probes.size()},
                     {"identities", r.id_set.size()},
                     {"genuine", r.genuine.size()},
                     {"impostor", r.impostor.size()},
                     {"classifiers_per_probe", classifiers}};
  s["config_hash"] = config_hash(options.config);
  return s;
}

/// Writes scores.csv, roc.csv and summary.json (deterministic for fixed
/// inputs) plus timing.json, which holds the wall-clock time.
inline void export_report(const EvaluationResult& r, const std::string& out_dir,
                          const ReportOptions& options = {}) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + out_dir + ": " + ec.message());
  const std::filesystem::path dir(out_dir);

  const auto open = [](const std::filesystem::path& p) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + p.string());
    return out;
  };
  const auto check = [](std::ofstream& out, const std::filesystem::path& p) {
    out.flush();
    if (!out) throw Error(ErrorCode::IoError, "failed writing " + p.string());
  };

  {
    const auto path = dir / "scores.csv";
    auto out = open(path);
    out << "probe,path,true_id,predicted";
    for (const auto& id : r.id_set) out << ',' << detail::csv_field(id);
    out << '\n';
    for (const auto& p : r.probes) {
      out << p.index << ',' << detail::csv_field(p.path) << ',' << detail::csv_field(p.true_id)
          << ',' << detail::csv_field(p.predicted);
      for (const auto& s : p.per_id) out << ',' << detail::format_real(s.score);
      out << '\n';
    }
    check(out, path);
  }
  {
    const auto path = dir / "roc.csv";
    auto out = open(path);
    out << "far,tar\n";
    for (const auto& pt : r.roc) out << detail::format_real(pt.far) << ',' << detail::format_real(pt.tar) << '\n';
    check(out, path);
  }
  {
    const auto path = dir / "summary.json";
    auto out = open(path);
    out << evaluation_summary(r, options).dump(2) << '\n';
    check(out, path);
  }
  {
    const auto path = dir / "timing.json";
    auto out = open(path);
    out << Json{{"wall_time_s", options.wall_time_s}}.dump(2) << '\n';
    check(out, path);
  }
}

}  // namespace pandaface
