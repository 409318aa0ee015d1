#pragma once

#include <string>

namespace sparsetemp {

enum class LogLevel { Error = 0, Info = 1, Debug = 2 };

// Level comes from SPARSETEMP_LOG (error|info|debug), default error.
LogLevel log_level();

void log_error(const std::string& msg);
void log_info(const std::string& msg);
void log_debug(const std::string& msg);

// 17 significant digits, shortest-round-trip friendly ("%.17g").
std::string format_double(double value);

}  // namespace sparsetemp
