#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pandaface/pandaface.hpp"

namespace fs = std::filesystem;
using namespace pandaface;

namespace {

struct Common {
  std::string config_path;
  std::optional<unsigned> threads;
};

RunConfig resolve_config(const Common& c) {
  RunConfig cfg = c.config_path.empty() ? RunConfig{} : load_config(c.config_path);
  if (c.threads) cfg.threads = *c.threads;
  return cfg;
}

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_path, "JSON run configuration")->check(CLI::ExistingFile);
  cmd->add_option("--threads", c.threads, "worker threads (0 = all cores)");
}

void print_id_counts(const std::vector<std::string>& ids) {
  std::map<std::string, int> counts;
  for (const auto& id : ids) ++counts[id];
  for (const auto& [id, n] : counts) std::printf("  %-16s %d\n", id.c_str(), n);
}

void print_ranking(const std::vector<IdentityScore>& per_id) {
  for (const auto& s : rank_identities(per_id)) {
    std::printf("  %-16s %s\n", s.panda_id.c_str(), detail::format_real(s.score).c_str());
  }
}

int cmd_synth(const std::string& out_dir, const SynthOptions& opts) {
  const auto data = generate_synthetic(opts);
  const fs::path root(out_dir);
  std::error_code ec;
  fs::create_directories(root / "images", ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + (root / "images").string() + ": " + ec.message());
  std::vector<ManifestRow> rows;
  for (const auto& s : data.samples) {
    const std::string rel = "images/" + s.file_name;
    save_png(s.image, (root / rel).string());
    rows.push_back({rel, s.panda_id, root / rel});
  }
  write_manifest(rows, (root / "manifest.csv").string());
  std::printf("wrote %zu images for %d identities to %s\n", rows.size(), opts.ids, out_dir.c_str());
  return 0;
}

int cmd_enroll(const Common& common, const std::string& manifest, const std::string& gallery_path,
               bool require_closed_set) {
  const RunConfig cfg = resolve_config(common);
  const auto dataset = load_dataset(manifest);
  std::vector<std::string> ids;
  for (const auto& li : dataset) ids.push_back(li.panda_id);
  if (require_closed_set) detail::check_closed_set(ids);
  const Gallery g = enroll(dataset, cfg.pipeline, resolve_threads(cfg.threads));
  save_gallery(g, gallery_path);
  std::printf("enrolled %zu entries (%zu identities) into %s\n", g.size(), g.id_set().size(),
              gallery_path.c_str());
  std::vector<std::string> enrolled;
  for (const auto& e : g.entries) enrolled.push_back(e.panda_id);
  print_id_counts(enrolled);
  return 0;
}

ScoreVector score_file(const std::string& gallery_path, const std::string& probe_path,
                       std::optional<unsigned> threads, Gallery& g) {
  g = load_gallery(gallery_path);
  const Image probe = load_image(probe_path);
  return score_probe(probe, g, resolve_threads(threads.value_or(0)));
}

int cmd_identify(const std::string& gallery_path, const std::string& probe_path,
                 std::optional<unsigned> threads) {
  Gallery g;
  const ScoreVector scores = score_file(gallery_path, probe_path, threads, g);
  const Identification id = identify(scores);
  std::printf("predicted %s\n", id.panda_id.c_str());
  print_ranking(id.per_id);
  return 0;
}

int cmd_verify(const std::string& gallery_path, const std::string& probe_path,
               const std::string& claim, double threshold, std::optional<unsigned> threads) {
  Gallery g;
  const ScoreVector scores = score_file(gallery_path, probe_path, threads, g);
  const Verification v = verify(scores, claim, threshold);
  std::printf("%s %s score %s threshold %s\n", v.accept ? "accept" : "reject", claim.c_str(),
              detail::format_real(v.score).c_str(), detail::format_real(threshold).c_str());
  return v.accept ? 0 : 3;
}

int cmd_evaluate(const Common& common, const std::string& manifest, const std::string& out_dir,
                 const std::vector<double>& fars, bool cache) {
  const RunConfig cfg = resolve_config(common);
  const auto dataset = load_dataset(manifest);
  const auto start = std::chrono::steady_clock::now();
  EvaluationOptions opts;
  opts.threads = resolve_threads(cfg.threads);
  opts.cache_alignments = cache;
  const EvaluationResult r = leave_one_out(dataset, cfg.pipeline, opts);
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;

  ReportOptions report;
  report.extra_fars = fars;
  report.config = Json(cfg.pipeline);
  report.wall_time_s = elapsed.count();
  export_report(r, out_dir, report);

  std::printf("probes %zu, identities %zu, classifiers per probe %zu\n", r.probes.size(),
              r.id_set.size(), r.probes.empty() ? std::size_t{0} : r.probes.front().scores.size());
  std::printf("TAR@1%%FAR %.4f\n", r.tar_at_far_1pct);
  for (double f : fars) std::printf("TAR@%gFAR %.4f\n", f, tar_at_far(r.roc, f));
  std::printf("rank-1 %.4f\n", r.rank_accuracies.empty() ? 0.0 : r.rank_accuracies.front());
  std::printf("report written to %s (%.1f s)\n", out_dir.c_str(), elapsed.count());
  return 0;
}

int cmd_align(const Common& common, const std::string& source_path, const std::string& target_path,
              const std::string& out_dir) {
  const RunConfig cfg = resolve_config(common);
  const Image source = load_image(source_path);
  const Image target = load_image(target_path);
  const auto& params = cfg.pipeline.alignment;
  const KeyPointSet ks = extract_keypoints(source, params);
  const KeyPointSet kt = extract_keypoints(target, params);
  const CpdResult cpd = cpd_affine(ks, kt, params.cpd);
  const Image warped = warp_affine_bicubic(source, cpd.transform, target.width(), target.height());

  const fs::path dir(out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + out_dir + ": " + ec.message());
  write_keypoints_csv(ks, (dir / "source_keypoints.csv").string());
  write_keypoints_csv(kt, (dir / "target_keypoints.csv").string());
  write_cpd_trace_csv(cpd.diagnostics, (dir / "cpd_trace.csv").string());
  save_png(warped, (dir / "aligned.png").string());
  const auto& m = cpd.transform.linear;
  const auto& t = cpd.transform.translation;
  std::printf("transform [%.6f %.6f; %.6f %.6f] + (%.4f, %.4f)\n", m(0, 0), m(0, 1), m(1, 0), m(1, 1),
              t.x(), t.y());
  std::printf("iterations %d, sigma2 %.6g, objective %.6g\n", cpd.diagnostics.iterations,
              cpd.diagnostics.sigma2, cpd.diagnostics.objective);
  return 0;
}

int cmd_features(const Common& common, const std::string& image_path, const std::string& prefix) {
  const RunConfig cfg = resolve_config(common);
  const FeatureVector fv = extract_features(load_image(image_path), cfg.pipeline.features);
  write_feature_vector(fv, cfg.pipeline.features, prefix);
  std::printf("%zu features written to %s.f32\n", fv.values.size(), prefix.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging_from_env();

  CLI::App app{"Giant panda face recognition: enrolment, identification and evaluation"};
  app.require_subcommand(1);

  Common common;
  std::string manifest, gallery, out, probe, claim, source, target;
  std::vector<double> fars;
  bool cache = false;
  bool closed_set = false;
  double threshold = 0.0;
  SynthOptions synth;
  std::optional<std::uint64_t> seed;

  auto* s = app.add_subcommand("synth", "generate the synthetic fixture (images + manifest)");
  s->add_option("--out", out, "output directory")->required();
  s->add_option("--seed", seed, "generator seed (defaults to the config seed)");
  s->add_option("--ids", synth.ids, "identities")->check(CLI::PositiveNumber);
  s->add_option("--per-id", synth.per_id, "images per identity")->check(CLI::PositiveNumber);
  s->add_option("--config", common.config_path, "JSON run configuration")->check(CLI::ExistingFile);

  auto* e = app.add_subcommand("enroll", "train one classifier per manifest image");
  add_common(e, common);
  e->add_option("--manifest", manifest, "path,panda_id CSV")->required();
  e->add_option("--gallery", gallery, "gallery file to write")->required();
  e->add_flag("--require-closed-set", closed_set, "every identity must have at least 2 images");

  auto* id = app.add_subcommand("identify", "rank enrolled identities for a probe image");
  id->add_option("--gallery", gallery, "gallery file")->required()->check(CLI::ExistingFile);
  id->add_option("--threads", common.threads, "worker threads (0 = all cores)");
  id->add_option("probe", probe, "probe image")->required();

  auto* v = app.add_subcommand("verify", "accept or reject a claimed identity (exit 3 on reject)");
  v->add_option("--gallery", gallery, "gallery file")->required()->check(CLI::ExistingFile);
  v->add_option("--claim", claim, "claimed panda_id")->required();
  v->add_option("--threshold", threshold, "acceptance threshold on the classifier score");
  v->add_option("--threads", common.threads, "worker threads (0 = all cores)");
  v->add_option("probe", probe, "probe image")->required();

  auto* ev = app.add_subcommand("evaluate", "leave-one-out evaluation with ROC and rank report");
  add_common(ev, common);
  ev->add_option("--manifest", manifest, "path,panda_id CSV")->required();
  ev->add_option("--out", out, "report directory")->required();
  ev->add_option("--far", fars, "extra FAR operating point (repeatable)")->check(CLI::Range(0.0, 1.0));
  ev->add_flag("--cache-alignments", cache, "align and describe each pair once, refit per fold");

  auto* dc = app.add_subcommand("dump-config", "print the effective configuration as JSON");
  dc->add_option("--config", common.config_path, "JSON run configuration")->check(CLI::ExistingFile);

  auto* al = app.add_subcommand("align", "debug: align one image onto another and dump the CPD run");
  add_common(al, common);
  al->add_option("source", source, "source image")->required();
  al->add_option("target", target, "target image")->required();
  al->add_option("--out", out, "output directory")->required();

  auto* fe = app.add_subcommand("features", "debug: dump the feature vector of one image");
  add_common(fe, common);
  fe->add_option("image", source, "image")->required();
  fe->add_option("--out", out, "output prefix (.f32 and .json are appended)")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*s) {
      const RunConfig cfg = resolve_config(common);
      synth.seed = seed.value_or(cfg.seed);
      return cmd_synth(out, synth);
    }
    if (*e) return cmd_enroll(common, manifest, gallery, closed_set);
    if (*id) return cmd_identify(gallery, probe, common.threads);
    if (*v) return cmd_verify(gallery, probe, claim, threshold, common.threads);
    if (*ev) return cmd_evaluate(common, manifest, out, fars, cache);
    if (*dc) {
      std::cout << dump_config(resolve_config(common));
      return 0;
    }
    if (*al) return cmd_align(common, source, target, out);
    if (*fe) return cmd_features(common, source, out);
  } catch (const Error& err) {
    std::fprintf(stderr, "pandaface: %s\n", err.what());
    return 1;
  } catch (const std::exception& err) {
    std::fprintf(stderr, "pandaface: unexpected failure: %s\n", err.what());
    return 1;
  }
  return 1;
}
