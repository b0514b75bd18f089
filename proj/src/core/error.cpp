#include "ek/error.hpp"

namespace ek {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput: return "invalid-input";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::StructuralPrecondition: return "structural-precondition";
    case ErrorKind::ResourceBound: return "resource-bound";
    case ErrorKind::DegenerateEvidence: return "degenerate-evidence";
    case ErrorKind::Malformed: return "malformed";
    case ErrorKind::ZeroProbability: return "zero-probability";
  }
  return "unknown";
}

}  // namespace ek
