#include "planehec/log.hpp"

#include <cstdlib>
#include <iostream>
#include <string_view>

namespace planehec {

LogLevel log_level() {
  const char* env = std::getenv("PLANEHEC_LOG");
  if (!env) return LogLevel::kWarn;
  const std::string_view v(env);
  if (v == "error") return LogLevel::kError;
  if (v == "info") return LogLevel::kInfo;
  if (v == "debug") return LogLevel::kDebug;
  return LogLevel::kWarn;
}

void log_message(LogLevel level, const std::string& message) {
  if (level > log_level()) return;
  static constexpr const char* kNames[] = {"error", "warn", "info", "debug"};
  std::cerr << "[planehec " << kNames[static_cast<int>(level)] << "] " << message << '\n';
}

}  // namespace planehec
