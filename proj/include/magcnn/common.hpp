#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>

namespace magcnn {

inline std::string format_fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

struct ArgumentError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad option values, malformed config files, unknown keys.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Missing or malformed dataset / cache / checkpoint files.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace magcnn
