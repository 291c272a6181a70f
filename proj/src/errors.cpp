#include "radwave/errors.hpp"

namespace radwave {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid-argument";
    case ErrorKind::NumericError: return "numeric-error";
    case ErrorKind::ResolutionError: return "resolution-error";
    case ErrorKind::BlowUpDetected: return "blow-up-detected";
    case ErrorKind::OutOfDomain: return "out-of-domain";
  }
  return "unknown";
}

}  // namespace radwave
