#include "radloc/log.hpp"

#include <atomic>
#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string>

namespace radloc::log {

namespace {

Level FromEnvironment() {
  const char* value = std::getenv("RADLOC_LOG");
  if (value == nullptr) return Level::Warn;
  const std::string v(value);
  if (v == "error") return Level::Error;
  if (v == "info") return Level::Info;
  if (v == "debug") return Level::Debug;
  return Level::Warn;
}

std::atomic<int>& Threshold() {
  static std::atomic<int> level{static_cast<int>(FromEnvironment())};
  return level;
}

constexpr const char* kNames[] = {"error", "warn", "info", "debug"};

}  // namespace

Level threshold() { return static_cast<Level>(Threshold().load()); }

void set_threshold(Level level) { Threshold().store(static_cast<int>(level)); }

void write(Level level, std::string_view message) {
  if (static_cast<int>(level) > Threshold().load()) return;
  static std::mutex mu;
  std::lock_guard lock(mu);
  std::cerr << "[radloc " << kNames[static_cast<int>(level)] << "] " << message << '\n';
}

}  // namespace radloc::log
