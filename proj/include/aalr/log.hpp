#pragma once

#include <string_view>

namespace aalr::log {

// Level is read once from AALR_LOG_LEVEL (trace, debug, info, warn, error, off).
// Default is warn.
void debug(std::string_view msg);
void info(std::string_view msg);
void warn(std::string_view msg);
void error(std::string_view msg);

} // namespace aalr::log
