#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gdb {

// Bad configuration or invalid arguments; maps to exit code 2 in the CLI.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Filesystem / serialization failures; maps to exit code 3 in the CLI.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A simulation or training loop produced a non-finite state; exit code 4.
struct DivergenceError : std::runtime_error {
  DivergenceError(const std::string& what, std::size_t step_index)
      : std::runtime_error(what + " (step " + std::to_string(step_index) + ")"),
        step(step_index) {}
  std::size_t step;
};

}  // namespace gdb
