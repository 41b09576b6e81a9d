#pragma once

#include <string>

namespace mcn {

// Warnings go to stderr so primary command output stays byte-stable.
void warn(const std::string& message);

void set_warnings_enabled(bool enabled);

}  // namespace mcn
