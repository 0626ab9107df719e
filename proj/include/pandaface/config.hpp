#pragma once

#include <cstdint>
#include <fstream>
#include <iterator>
#include <string>

#include "pandaface/json_util.hpp"
#include "pandaface/pipeline.hpp"

namespace pandaface {

inline constexpr int kRunConfigVersion = 1;

/// Top-level configuration file for the command-line tool.
struct RunConfig {
  PipelineConfig pipeline;
  std::uint64_t seed = 42;
  /// 0 means one worker per hardware thread.
  unsigned threads = 0;

  void validate() const { pipeline.validate(); }

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

inline void to_json(Json& j, const RunConfig& c) {
  j = Json(c.pipeline);
  j["version"] = kRunConfigVersion;
  j["seed"] = c.seed;
  j["threads"] = c.threads;
}

inline void from_json(const Json& j, RunConfig& c) {
  detail::require_object_with_keys(j, {"version", "features", "alignment", "pls", "seed", "threads"},
                                   "config");
  if (!j.contains("version") || !j.at("version").is_number_integer() ||
      j.at("version").get<int>() != kRunConfigVersion) {
    throw Error(ErrorCode::ConfigError,
                "config must declare \"version\": " + std::to_string(kRunConfigVersion));
  }
  Json pipeline = Json::object();
  for (const char* key : {"features", "alignment", "pls"}) {
    if (j.contains(key)) pipeline[key] = j.at(key);
  }
  c.pipeline = pipeline.get<PipelineConfig>();
  detail::read_if_present(j, "seed", c.seed, "config");
  detail::read_if_present(j, "threads", c.threads, "config");
}

inline std::string dump_config(const RunConfig& c) { return Json(c).dump(2) + "\n"; }

inline RunConfig parse_config(const std::string& text) {
  RunConfig c;
  try {
    c = Json::parse(text).get<RunConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigError, e.what());
  }
  c.validate();
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open config " + path);
  return parse_config(std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>()));
}

}  // namespace pandaface
