#pragma once

#include <stdexcept>
#include <string>

namespace radwave {

/// Failure categories surfaced by the library. Each maps to one exception
/// type so callers can catch precisely what they expect.
enum class ErrorKind {
  InvalidArgument,
  NumericError,
  ResolutionError,
  BlowUpDetected,
  OutOfDomain,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

struct InvalidArgument : Error {
  explicit InvalidArgument(const std::string& w) : Error(ErrorKind::InvalidArgument, w) {}
};
struct NumericError : Error {
  explicit NumericError(const std::string& w) : Error(ErrorKind::NumericError, w) {}
};
struct ResolutionError : Error {
  explicit ResolutionError(const std::string& w) : Error(ErrorKind::ResolutionError, w) {}
};
struct BlowUpDetected : Error {
  explicit BlowUpDetected(const std::string& w) : Error(ErrorKind::BlowUpDetected, w) {}
};
struct OutOfDomain : Error {
  explicit OutOfDomain(const std::string& w) : Error(ErrorKind::OutOfDomain, w) {}
};

const char* to_string(ErrorKind kind) noexcept;

}  // namespace radwave
