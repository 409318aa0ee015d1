#include "sparsetemp/logging.hpp"

#include <cstdio>
#include <cstdlib>
#include <iostream>

namespace sparsetemp {

LogLevel log_level() {
    static const LogLevel level = [] {
        const char* env = std::getenv("SPARSETEMP_LOG");
        if (env == nullptr) return LogLevel::Error;
        const std::string value(env);
        if (value == "debug") return LogLevel::Debug;
        if (value == "info") return LogLevel::Info;
        return LogLevel::Error;
    }();
    return level;
}

namespace {
void emit(const char* tag, const std::string& msg) { std::cerr << tag << msg << '\n'; }
}  // namespace

void log_error(const std::string& msg) { emit("[error] ", msg); }

void log_info(const std::string& msg) {
    if (log_level() >= LogLevel::Info) emit("[info] ", msg);
}

void log_debug(const std::string& msg) {
    if (log_level() >= LogLevel::Debug) emit("[debug] ", msg);
}

std::string format_double(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

}  // namespace sparsetemp
