#pragma once

#include <algorithm>
#include <initializer_list>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "pandaface/error.hpp"

namespace pandaface {

using Json = nlohmann::json;

namespace detail {

// Rejects keys outside `allowed` so typos in config files fail loudly.
inline void require_object_with_keys(const Json& j, std::initializer_list<std::string_view> allowed,
                                     std::string_view context) {
  if (!j.is_object()) {
    throw Error(ErrorCode::ConfigError, std::string(context) + " must be a JSON object");
  }
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw Error(ErrorCode::ConfigError,
                  "unknown key '" + key + "' in " + std::string(context));
    }
  }
}

template <typename T>
void read_if_present(const Json& j, const char* key, T& out, std::string_view context) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigError,
                std::string(context) + "." + key + ": " + e.what());
  }
}

}  // namespace detail
}  // namespace pandaface
