#pragma once

#include <functional>
#include <string_view>

namespace statefusion {

using WarningHandler = std::function<void(std::string_view)>;

/// Emits a warning through the installed handler (stderr by default).
void warn(std::string_view message);

/// Replaces the warning handler, returning the previous one. Passing an empty
/// function restores the stderr handler.
WarningHandler set_warning_handler(WarningHandler handler);

}  // namespace statefusion
