#include "aalr/log.hpp"

#include <cstdlib>
#include <memory>
#include <string>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

namespace aalr::log {
namespace {

std::shared_ptr<spdlog::logger> make_logger() {
    auto logger = spdlog::stderr_color_mt("aalr");
    logger->set_pattern("[%H:%M:%S.%e] [%^%l%$] %v");
    auto level = spdlog::level::warn;
    if (const char* env = std::getenv("AALR_LOG_LEVEL"); env != nullptr && *env != '\0') {
        level = spdlog::level::from_str(env);
    }
    logger->set_level(level);
    return logger;
}

spdlog::logger& logger() {
    static std::shared_ptr<spdlog::logger> instance = make_logger();
    return *instance;
}

} // namespace

void debug(std::string_view msg) { logger().debug(msg); }
void info(std::string_view msg) { logger().info(msg); }
void warn(std::string_view msg) { logger().warn(msg); }
void error(std::string_view msg) { logger().error(msg); }

} // namespace aalr::log
