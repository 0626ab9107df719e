#pragma once

#include <cstdlib>
#include <string_view>

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

namespace pandaface {

/// Maps PANDAFACE_LOG (error | warn | info | debug) onto the default logger,
/// which writes to standard error. Unset or unknown values mean "warn".
inline void configure_logging_from_env() {
  auto logger = spdlog::stderr_logger_mt("pandaface");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);

  const char* env = std::getenv("PANDAFACE_LOG");
  const std::string_view level = env ? env : "warn";
  if (level == "error") {
    spdlog::set_level(spdlog::level::err);
  } else if (level == "info") {
    spdlog::set_level(spdlog::level::info);
  } else if (level == "debug") {
    spdlog::set_level(spdlog::level::debug);
  } else {
    spdlog::set_level(spdlog::level::warn);
  }
}

}  // namespace pandaface
