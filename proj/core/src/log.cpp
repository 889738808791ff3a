#include "partforest/log.hpp"

#include <cstdlib>
#include <string>

namespace partforest {

LogLevel log_level() {
    static const LogLevel level = [] {
        const char* env = std::getenv("PARTFOREST_LOG");
        if (!env) return LogLevel::kError;
        const std::string v(env);
        if (v == "debug") return LogLevel::kDebug;
        if (v == "info") return LogLevel::kInfo;
        return LogLevel::kError;
    }();
    return level;
}

namespace detail {
void log_line(LogLevel level, const std::string& msg) {
    const char* tag = level == LogLevel::kDebug  ? "debug"
                      : level == LogLevel::kInfo ? "info"
                                                 : "error";
    std::cerr << "[partforest:" << tag << "] " << msg << "\n";
}
}  // namespace detail

}  // namespace partforest
