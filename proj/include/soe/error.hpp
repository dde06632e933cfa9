#pragma once

#include <stdexcept>
#include <string>

namespace soe {

enum class ErrorCode {
  InvalidArgument,
  Parse,
  Io,
  Domain,
  NoData,
};

// Single exception type for the core library. The C API maps `code()` onto
// soe_status values.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace soe
