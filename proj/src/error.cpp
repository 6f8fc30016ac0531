#include "edgescale/error.hpp"

namespace edgescale {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::kValidation: return "validation";
    case ErrorKind::kNotFound: return "not-found";
    case ErrorKind::kUnavailable: return "service-unavailable";
    case ErrorKind::kMaxUsersExceeded: return "max-users-exceeded";
    case ErrorKind::kOutOfBounds: return "out-of-bounds";
    case ErrorKind::kUnreachable: return "unreachable";
    case ErrorKind::kRejected: return "rejected";
    case ErrorKind::kIo: return "io";
  }
  return "unknown";
}

}  // namespace edgescale
