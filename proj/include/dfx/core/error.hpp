#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dfx {

/// Failure categories shared by every module. The service layer maps these
/// onto HTTP status codes, so keep the list closed.
enum class ErrorKind {
  input,               // malformed or out-of-contract caller input
  configuration,       // missing backend, bad threshold, zone grid too large
  numeric,             // non-finite activations, underflowing differences
  capability,          // backend cannot provide gradients
  backend,             // external adapter failed or timed out
  grounding_violation, // text cites a zone the evidence does not support
  not_found,
  training,
  io,
  parse,
  undefined_metric,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace dfx
