#pragma once

#include <chrono>
#include <cstdlib>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <string_view>

namespace strata::log {

enum class Level { Debug = 0, Info = 1, Warn = 2, Error = 3, Off = 4 };

// Level comes from STRATA_LOG (debug|info|warn|error|off), default warn.
inline Level parse_level(std::string_view s) {
  if (s == "debug") return Level::Debug;
  if (s == "info") return Level::Info;
  if (s == "warn" || s == "warning") return Level::Warn;
  if (s == "error") return Level::Error;
  if (s == "off" || s == "none") return Level::Off;
  return Level::Warn;
}

inline Level& threshold() {
  static Level level = [] {
    const char* env = std::getenv("STRATA_LOG");
    return env ? parse_level(env) : Level::Warn;
  }();
  return level;
}

inline void write(Level level, const std::string& msg) {
  if (level < threshold()) return;
  static std::mutex mu;
  static constexpr const char* names[] = {"debug", "info", "warn", "error"};
  std::lock_guard lock(mu);
  std::cerr << "[strata " << names[static_cast<int>(level)] << "] " << msg << '\n';
}

template <typename... Args>
std::string concat(Args&&... args) {
  std::ostringstream oss;
  (oss << ... << std::forward<Args>(args));
  return oss.str();
}

template <typename... Args>
void debug(Args&&... args) { write(Level::Debug, concat(std::forward<Args>(args)...)); }
template <typename... Args>
void info(Args&&... args) { write(Level::Info, concat(std::forward<Args>(args)...)); }
template <typename... Args>
void warn(Args&&... args) { write(Level::Warn, concat(std::forward<Args>(args)...)); }
template <typename... Args>
void error(Args&&... args) { write(Level::Error, concat(std::forward<Args>(args)...)); }

/// Logs elapsed wall time at info level when it goes out of scope.
class StageTimer {
 public:
  explicit StageTimer(std::string name)
      : name_(std::move(name)), start_(std::chrono::steady_clock::now()) {}
  ~StageTimer() {
    auto ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
    info("stage ", name_, " took ", ms, " ms");
  }
  StageTimer(const StageTimer&) = delete;
  StageTimer& operator=(const StageTimer&) = delete;

 private:
  std::string name_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace strata::log
