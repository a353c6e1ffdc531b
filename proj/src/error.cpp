#include "keyforge/error.hpp"

namespace keyforge {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::TooShort: return "TooShort";
    case ErrorKind::AllTrimmed: return "AllTrimmed";
    case ErrorKind::Unordered: return "Unordered";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::SchemaError: return "SchemaError";
    case ErrorKind::ZeroMean: return "ZeroMean";
    case ErrorKind::ZeroVariance: return "ZeroVariance";
    case ErrorKind::ZeroPooledVariance: return "ZeroPooledVariance";
    case ErrorKind::InvalidSpec: return "InvalidSpec";
    case ErrorKind::InvalidCounts: return "InvalidCounts";
    case ErrorKind::OutOfRange: return "OutOfRange";
    case ErrorKind::EmptySample: return "EmptySample";
    case ErrorKind::EmptyCorpus: return "EmptyCorpus";
    case ErrorKind::InsufficientData: return "InsufficientData";
    case ErrorKind::UntrainedModel: return "UntrainedModel";
    case ErrorKind::SingleClass: return "SingleClass";
    case ErrorKind::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

int exit_code_for(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::ZeroMean:
    case ErrorKind::ZeroVariance:
    case ErrorKind::ZeroPooledVariance:
    case ErrorKind::NonFiniteLoss:
      return 3;
    default:
      return 2;
  }
}

}  // namespace keyforge
