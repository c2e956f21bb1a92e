#include "fbra/log.hpp"

#include <cstdlib>
#include <iostream>

namespace fbra {

namespace {

LogLevel parse_level() {
  const char* env = std::getenv("FBRA_LOG_LEVEL");
  if (env == nullptr) return LogLevel::Warn;
  const std::string value(env);
  if (value == "error") return LogLevel::Error;
  if (value == "warn") return LogLevel::Warn;
  if (value == "info") return LogLevel::Info;
  if (value == "debug") return LogLevel::Debug;
  return LogLevel::Warn;
}

const char* level_name(LogLevel level) {
  switch (level) {
    case LogLevel::Error:
      return "error";
    case LogLevel::Warn:
      return "warn";
    case LogLevel::Info:
      return "info";
    case LogLevel::Debug:
      return "debug";
  }
  return "?";
}

}  // namespace

LogLevel log_level() {
  static const LogLevel level = parse_level();
  return level;
}

bool log_enabled(LogLevel level) {
  return static_cast<int>(level) <= static_cast<int>(log_level());
}

void log(LogLevel level, const std::string& message) {
  if (!log_enabled(level)) return;
  std::cerr << "[fbra " << level_name(level) << "] " << message << '\n';
}

}  // namespace fbra
