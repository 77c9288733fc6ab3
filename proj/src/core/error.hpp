#pragma once

#include <stdexcept>
#include <string>

namespace quadsim {

enum class ErrorCode {
  kInvalidArgument = 1,
  kInvalidParams,
  kInvalidConfig,
  kIntegrationFailure,
  kLifecycle,
  kIo,
  kProtocol,
};

// Every failure raised by the core carries one of the codes above so the C
// layer can translate it without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class IntegrationError : public Error {
 public:
  IntegrationError(const std::string& what, double last_valid_time)
      : Error(ErrorCode::kIntegrationFailure, what), last_valid_time_(last_valid_time) {}
  double last_valid_time() const noexcept { return last_valid_time_; }

 private:
  double last_valid_time_;
};

}  // namespace quadsim
