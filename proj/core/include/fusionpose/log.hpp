#pragma once

#include <cstdint>
#include <string_view>

namespace fusionpose {

enum class LogLevel { quiet = 0, warning = 1, info = 2 };

void set_log_level(LogLevel level);
LogLevel log_level();

// Writes to stderr at or below the current level. Warnings are always counted.
void log_warning(std::string_view message);
void log_info(std::string_view message);
std::uint64_t warning_count();

}  // namespace fusionpose
