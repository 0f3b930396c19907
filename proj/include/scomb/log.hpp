#pragma once

#include <string>

namespace scomb {

enum class LogLevel { debug = 0, info = 1, warn = 2, error = 3, off = 4 };

/// Threshold from SIMPLEX_COMBINE_LOG (debug|info|warn|error|off),
/// read once; defaults to warn.
LogLevel log_threshold();

/// Write "[level] msg" to stderr when `level` passes the threshold.
void log_message(LogLevel level, const std::string& msg);

}  // namespace scomb
