#pragma once

#include <iostream>
#include <sstream>

namespace partforest {

enum class LogLevel { kError = 0, kInfo = 1, kDebug = 2 };

// Level comes from PARTFOREST_LOG ({error, info, debug}); defaults to error.
LogLevel log_level();

namespace detail {
void log_line(LogLevel level, const std::string& msg);
}

template <typename... Args>
void log_info(Args&&... args) {
    if (log_level() < LogLevel::kInfo) return;
    std::ostringstream os;
    (os << ... << args);
    detail::log_line(LogLevel::kInfo, os.str());
}

template <typename... Args>
void log_debug(Args&&... args) {
    if (log_level() < LogLevel::kDebug) return;
    std::ostringstream os;
    (os << ... << args);
    detail::log_line(LogLevel::kDebug, os.str());
}

template <typename... Args>
void log_error(Args&&... args) {
    std::ostringstream os;
    (os << ... << args);
    detail::log_line(LogLevel::kError, os.str());
}

}  // namespace partforest
