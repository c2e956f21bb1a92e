#pragma once

#include <string>

namespace fbra {

enum class LogLevel { Error = 0, Warn = 1, Info = 2, Debug = 3 };

// Level comes from FBRA_LOG_LEVEL (error|warn|info|debug), default warn.
LogLevel log_level();
bool log_enabled(LogLevel level);
void log(LogLevel level, const std::string& message);

}  // namespace fbra
