#pragma once

#include "pandaface/alignment.hpp"
#include "pandaface/features.hpp"
#include "pandaface/json_util.hpp"

namespace pandaface {

/// Everything that shapes enrolment and scoring; stored inside galleries so a
/// probe is always processed exactly as the gallery was built.
struct PipelineConfig {
  FeatureConfig features;
  AlignmentParams alignment;
  int pls_components = 15;

  void validate() const {
    features.validate();
    alignment.validate();
    if (pls_components < 1) throw Error(ErrorCode::ConfigError, "pls n_components must be >= 1");
  }

  friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

inline void to_json(Json& j, const CpdParams& p) {
  j = Json{{"outlier_weight", p.outlier_weight},
           {"max_iterations", p.max_iterations},
           {"tolerance", p.tolerance},
           {"max_points", p.max_points}};
}

inline void from_json(const Json& j, CpdParams& p) {
  detail::require_object_with_keys(j, {"outlier_weight", "max_iterations", "tolerance", "max_points"},
                                   "cpd");
  detail::read_if_present(j, "outlier_weight", p.outlier_weight, "cpd");
  detail::read_if_present(j, "max_iterations", p.max_iterations, "cpd");
  detail::read_if_present(j, "tolerance", p.tolerance, "cpd");
  detail::read_if_present(j, "max_points", p.max_points, "cpd");
}

inline void to_json(Json& j, const AlignmentParams& p) {
  j = Json{{"sobel_threshold_frac", p.sobel_threshold_frac}, {"cpd", p.cpd}};
}

inline void from_json(const Json& j, AlignmentParams& p) {
  detail::require_object_with_keys(j, {"sobel_threshold_frac", "cpd"}, "alignment");
  detail::read_if_present(j, "sobel_threshold_frac", p.sobel_threshold_frac, "alignment");
  if (j.contains("cpd")) p.cpd = j.at("cpd").get<CpdParams>();
}

inline void to_json(Json& j, const PipelineConfig& c) {
  j = Json{{"features", c.features},
           {"alignment", c.alignment},
           {"pls", Json{{"n_components", c.pls_components}}}};
}

inline void from_json(const Json& j, PipelineConfig& c) {
  detail::require_object_with_keys(j, {"features", "alignment", "pls"}, "pipeline");
  if (j.contains("features")) c.features = j.at("features").get<FeatureConfig>();
  if (j.contains("alignment")) c.alignment = j.at("alignment").get<AlignmentParams>();
  if (j.contains("pls")) {
    const auto& pls = j.at("pls");
    detail::require_object_with_keys(pls, {"n_components"}, "pls");
    detail::read_if_present(pls, "n_components", c.pls_components, "pls");
  }
}

}  // namespace pandaface
