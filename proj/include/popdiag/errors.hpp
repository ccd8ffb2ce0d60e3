#pragma once

#include <stdexcept>
#include <string>

namespace popdiag {

// Exit-code categories shared by the C API and the CLI.
enum class ErrorCode : int {
  Ok = 0,
  Config = 2,
  Data = 3,
  Internal = 4,
};

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DataError : std::runtime_error {
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

struct InternalError : std::logic_error {
  explicit InternalError(const std::string& msg) : std::logic_error(msg) {}
};

inline void check_internal(bool cond, const std::string& msg) {
  if (!cond) throw InternalError(msg);
}

}  // namespace popdiag
