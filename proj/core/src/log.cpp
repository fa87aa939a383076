#include "vatensor/log.hpp"

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <mutex>

namespace vatensor::log {

namespace {

Level parse_env() {
  const char* v = std::getenv("VA_TENSOR_LOG");
  if (v == nullptr) return Level::kWarn;
  if (std::strcmp(v, "debug") == 0) return Level::kDebug;
  if (std::strcmp(v, "info") == 0) return Level::kInfo;
  if (std::strcmp(v, "warn") == 0) return Level::kWarn;
  if (std::strcmp(v, "error") == 0) return Level::kError;
  if (std::strcmp(v, "off") == 0) return Level::kOff;
  return Level::kWarn;
}

std::atomic<int>& threshold() {
  static std::atomic<int> value{static_cast<int>(parse_env())};
  return value;
}

const char* name(Level lvl) {
  switch (lvl) {
    case Level::kDebug: return "debug";
    case Level::kInfo: return "info";
    case Level::kWarn: return "warn";
    case Level::kError: return "error";
    default: return "off";
  }
}

std::mutex& sink_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

Level level() { return static_cast<Level>(threshold().load()); }

void set_level(Level lvl) { threshold().store(static_cast<int>(lvl)); }

bool enabled(Level lvl) { return static_cast<int>(lvl) >= threshold().load(); }

void write(Level lvl, const std::string& msg) {
  if (!enabled(lvl) || lvl == Level::kOff) return;
  std::lock_guard<std::mutex> lock(sink_mutex());
  std::fprintf(stderr, "[vatensor] %s: %s\n", name(lvl), msg.c_str());
}

}  // namespace vatensor::log
