#pragma once

#include <functional>
#include <string_view>

namespace neqresponse {

using WarningHandler = std::function<void(std::string_view module, std::string_view message)>;

/// Installs a process-wide warning sink and returns the previous one.
/// The default handler writes "warning[module]: message" to stderr.
WarningHandler set_warning_handler(WarningHandler handler);

void warn(std::string_view module, std::string_view message);

/// Library version, "major.minor.patch".
std::string_view version() noexcept;

}  // namespace neqresponse
