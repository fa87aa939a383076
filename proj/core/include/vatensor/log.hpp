#pragma once

#include <string>

namespace vatensor::log {

enum class Level { kDebug = 0, kInfo = 1, kWarn = 2, kError = 3, kOff = 4 };

// Current threshold. Initialized once from the VA_TENSOR_LOG environment
// variable (debug|info|warn|error|off); defaults to warn.
Level level();
void set_level(Level lvl);

bool enabled(Level lvl);

// Writes "[vatensor] <level>: <msg>" to stderr if lvl passes the threshold.
void write(Level lvl, const std::string& msg);

inline void debug(const std::string& msg) { write(Level::kDebug, msg); }
inline void info(const std::string& msg) { write(Level::kInfo, msg); }
inline void warn(const std::string& msg) { write(Level::kWarn, msg); }
inline void error(const std::string& msg) { write(Level::kError, msg); }

}  // namespace vatensor::log
