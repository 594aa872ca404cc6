#pragma once

#include <functional>
#include <string>

namespace tfct {

// Non-fatal warnings from the library. The default sink prints
// "warning: <message>" to stderr.
using WarningSink = std::function<void(const std::string&)>;

void warn(const std::string& message);

// Installs `sink` and returns the previous one. An empty sink restores the default.
WarningSink set_warning_sink(WarningSink sink);

}  // namespace tfct
