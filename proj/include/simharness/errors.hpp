// SPDX-License-Identifier: Apache-2.0
#ifndef SIMHARNESS_ERRORS_HPP
#define SIMHARNESS_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace simharness {

// Hard failures raised by library operations. Per-repetition method
// failures are not errors; they are recorded in Estimate::error_code.
enum class ErrorCode {
  invalid_parameter,
  invalid_state,
  empty_source,
  missing_base_case,
  non_factorial_grid,
  insufficient_data,
  insufficient_methods,
  unknown_repetition,
  cannot_continue,
  stream_reuse,
  config_error,
  io_error,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::invalid_parameter: return "InvalidParameter";
    case ErrorCode::invalid_state: return "InvalidState";
    case ErrorCode::empty_source: return "EmptySource";
    case ErrorCode::missing_base_case: return "MissingBaseCase";
    case ErrorCode::non_factorial_grid: return "NonFactorialGrid";
    case ErrorCode::insufficient_data: return "InsufficientData";
    case ErrorCode::insufficient_methods: return "InsufficientMethods";
    case ErrorCode::unknown_repetition: return "UnknownRepetition";
    case ErrorCode::cannot_continue: return "CannotContinue";
    case ErrorCode::stream_reuse: return "StreamReuse";
    case ErrorCode::config_error: return "ConfigError";
    case ErrorCode::io_error: return "IoError";
  }
  return "Unknown";
}

}  // namespace simharness

#endif
