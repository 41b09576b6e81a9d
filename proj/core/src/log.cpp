#include "mcn/log.hpp"

#include <atomic>
#include <iostream>

namespace mcn {

namespace {
std::atomic<bool> warnings_enabled{true};
}

void set_warnings_enabled(bool enabled) { warnings_enabled.store(enabled); }

void warn(const std::string& message) {
  if (warnings_enabled.load()) {
    std::cerr << "warning: " << message << "\n";
  }
}

}  // namespace mcn
