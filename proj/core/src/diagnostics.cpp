#include "neqresponse/diagnostics.hpp"

#include <iostream>
#include <mutex>
#include <utility>

namespace neqresponse {
namespace {

std::mutex& handler_mutex() {
  static std::mutex m;
  return m;
}

WarningHandler& current_handler() {
  static WarningHandler handler = [](std::string_view module, std::string_view message) {
    std::cerr << "warning[" << module << "]: " << message << '\n';
  };
  return handler;
}

}  // namespace

WarningHandler set_warning_handler(WarningHandler handler) {
  std::lock_guard lock(handler_mutex());
  return std::exchange(current_handler(), std::move(handler));
}

void warn(std::string_view module, std::string_view message) {
  std::lock_guard lock(handler_mutex());
  if (current_handler()) current_handler()(module, message);
}

std::string_view version() noexcept { return NEQRESPONSE_VERSION; }

}  // namespace neqresponse
