#include "dfx/core/error.hpp"

namespace dfx {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::input: return "input";
    case ErrorKind::configuration: return "configuration";
    case ErrorKind::numeric: return "numeric";
    case ErrorKind::capability: return "capability";
    case ErrorKind::backend: return "backend";
    case ErrorKind::grounding_violation: return "grounding_violation";
    case ErrorKind::not_found: return "not_found";
    case ErrorKind::training: return "training";
    case ErrorKind::io: return "io";
    case ErrorKind::parse: return "parse";
    case ErrorKind::undefined_metric: return "undefined_metric";
  }
  return "unknown";
}

}  // namespace dfx
