#pragma once

#include <stdexcept>
#include <string>

namespace pairkit {

enum class ErrorCode {
  unknown_key,              // config key not in the documented key table
  invalid_value,            // config value failed to parse
  invariant_violation,      // parsed config violates a type invariant
  domain_error,             // argument outside an operation's domain
  capacity,                 // expected event count exceeds the memory budget
  unsorted_stream,          // event stream times decrease
  no_peak,                  // histogram has no significant peak
  no_background,            // zero background counts with a nonzero peak
  overlapping_windows,      // requested analysis windows overlap
  insufficient_background,  // too few bins left outside the exclusion windows
  degenerate_data,          // data cannot constrain the fit parameters
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

// Raised by the config parser; carries the offending key and 1-based line.
class ConfigError : public Error {
 public:
  ConfigError(ErrorCode code, std::string key, int line, const std::string& message)
      : Error(code, message), key_(std::move(key)), line_(line) {}

  const std::string& key() const { return key_; }
  int line() const { return line_; }

 private:
  std::string key_;
  int line_;
};

}  // namespace pairkit
