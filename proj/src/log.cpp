#include "scomb/log.hpp"

#include <cstdlib>
#include <iostream>
#include <mutex>

namespace scomb {

LogLevel log_threshold() {
    static const LogLevel threshold = [] {
        const char* env = std::getenv("SIMPLEX_COMBINE_LOG");
        if (!env) return LogLevel::warn;
        const std::string v(env);
        if (v == "debug") return LogLevel::debug;
        if (v == "info") return LogLevel::info;
        if (v == "warn") return LogLevel::warn;
        if (v == "error") return LogLevel::error;
        if (v == "off") return LogLevel::off;
        return LogLevel::warn;
    }();
    return threshold;
}

void log_message(LogLevel level, const std::string& msg) {
    if (level < log_threshold()) return;
    static std::mutex mu;
    const char* tag = "?";
    switch (level) {
        case LogLevel::debug: tag = "debug"; break;
        case LogLevel::info: tag = "info"; break;
        case LogLevel::warn: tag = "warn"; break;
        case LogLevel::error: tag = "error"; break;
        case LogLevel::off: return;
    }
    std::lock_guard<std::mutex> lock(mu);
    std::cerr << "[" << tag << "] " << msg << "\n";
}

}  // namespace scomb
