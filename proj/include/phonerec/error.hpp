#pragma once

#include <stdexcept>
#include <string>

namespace phonerec {

// Exit-code mapping in the CLI: ConfigError -> 1, DataError -> 2, anything else -> 3.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Non-fatal diagnostics go to stderr so report files stay byte-stable.
void warn(const std::string& message);

}  // namespace phonerec
