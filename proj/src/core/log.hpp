#pragma once

#include <functional>
#include <string>

namespace vusc {

using WarningHandler = std::function<void(const std::string&)>;

// Installs a process-wide handler for non-fatal diagnostics; the default
// writes to stderr. Passing an empty function restores the default.
void set_warning_handler(WarningHandler handler);
void warn(const std::string& message);

}  // namespace vusc
