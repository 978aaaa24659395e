#include "fusionpose/log.hpp"

#include <atomic>
#include <iostream>

namespace fusionpose {
namespace {

std::atomic<int> g_level{static_cast<int>(LogLevel::warning)};
std::atomic<std::uint64_t> g_warnings{0};

}  // namespace

void set_log_level(LogLevel level) { g_level = static_cast<int>(level); }
LogLevel log_level() { return static_cast<LogLevel>(g_level.load()); }

void log_warning(std::string_view message) {
  ++g_warnings;
  if (g_level.load() >= static_cast<int>(LogLevel::warning)) std::cerr << "warning: " << message << '\n';
}

void log_info(std::string_view message) {
  if (g_level.load() >= static_cast<int>(LogLevel::info)) std::cerr << message << '\n';
}

std::uint64_t warning_count() { return g_warnings.load(); }

}  // namespace fusionpose
