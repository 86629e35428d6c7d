#include "hsicgsa/errors.hpp"

namespace hsicgsa {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidParameter: return "invalid-parameter";
    case ErrorCode::Domain: return "domain";
    case ErrorCode::Degenerate: return "degenerate";
    case ErrorCode::SupportViolation: return "support-violation";
    case ErrorCode::SizeMismatch: return "size-mismatch";
    case ErrorCode::Unsupported: return "unsupported";
    case ErrorCode::HeavyTail: return "heavy-tail";
    case ErrorCode::ModelFailure: return "model-failure";
    case ErrorCode::Parse: return "parse";
    case ErrorCode::Schema: return "schema";
    case ErrorCode::Io: return "io";
  }
  return "unknown";
}

}  // namespace hsicgsa
