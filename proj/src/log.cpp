#include "reid/log.hpp"

#include <atomic>
#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string>

namespace reid {

namespace {

LogLevel from_env() {
    const char* v = std::getenv("REID_ADAPT_LOG");
    if (!v) return LogLevel::Error;
    const std::string s(v);
    if (s == "debug") return LogLevel::Debug;
    if (s == "info") return LogLevel::Info;
    return LogLevel::Error;
}

std::atomic<int>& level_slot() {
    static std::atomic<int> level{static_cast<int>(from_env())};
    return level;
}

void emit(LogLevel level, const char* tag, std::string_view msg) {
    if (static_cast<int>(level) > level_slot().load()) return;
    static std::mutex mu;
    std::lock_guard lock(mu);
    std::clog << '[' << tag << "] " << msg << '\n';
}

}  // namespace

LogLevel log_level() { return static_cast<LogLevel>(level_slot().load()); }
void set_log_level(LogLevel level) { level_slot().store(static_cast<int>(level)); }

void log_error(std::string_view msg) { emit(LogLevel::Error, "error", msg); }
void log_info(std::string_view msg) { emit(LogLevel::Info, "info", msg); }
void log_debug(std::string_view msg) { emit(LogLevel::Debug, "debug", msg); }

}  // namespace reid
