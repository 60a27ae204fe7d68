#include "conveyor/error.hpp"

#include <atomic>
#include <iostream>

namespace conveyor {

namespace {
std::atomic<bool> warnings_enabled{true};
}

void warn(const std::string& message) {
  if (warnings_enabled.load()) std::cerr << "warning: " << message << '\n';
}

void set_warnings_enabled(bool enabled) { warnings_enabled.store(enabled); }

}  // namespace conveyor
