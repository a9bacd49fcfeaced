#pragma once

#include <stdexcept>
#include <string>

namespace bayesclear {

enum class ErrorCode {
  invalid_argument = 1,
  dimension_mismatch,
  size_limit,
  parse,
  io,
  numeric,
  precondition,
};

// All library failures are reported as Error; the C API maps code() onto
// its status values.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace bayesclear
