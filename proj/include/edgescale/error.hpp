#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace edgescale {

enum class ErrorKind {
  kValidation,        // malformed input or violated config invariant
  kNotFound,          // unknown zone, deployment or address
  kUnavailable,       // no snapshot published yet
  kMaxUsersExceeded,  // steering would exceed max_users
  kOutOfBounds,       // replica count outside deployment bounds
  kUnreachable,       // remote API did not answer
  kRejected,          // remote API answered with an error status
  kIo,                // file or socket failure
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace edgescale
