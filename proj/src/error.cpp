#include "xsum/error.hpp"

namespace xsum {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedXml: return "MalformedXml";
    case ErrorCode::EmptyDocument: return "EmptyDocument";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::TruncatedInput: return "TruncatedInput";
    case ErrorCode::NotAncestor: return "NotAncestor";
    case ErrorCode::SummaryMismatch: return "SummaryMismatch";
    case ErrorCode::UnknownPath: return "UnknownPath";
    case ErrorCode::CorruptStore: return "CorruptStore";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::SyntaxError: return "SyntaxError";
    case ErrorCode::UnsupportedFeature: return "UnsupportedFeature";
    case ErrorCode::InvariantViolation: return "InvariantViolation";
    case ErrorCode::TupleExplosion: return "TupleExplosion";
    case ErrorCode::UnsortedInput: return "UnsortedInput";
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::Unsatisfiable: return "Unsatisfiable";
    case ErrorCode::OutOfBudget: return "OutOfBudget";
    case ErrorCode::SpecTooLarge: return "SpecTooLarge";
  }
  return "Unknown";
}

namespace {
std::string format_message(ErrorCode code, const std::string& message, std::size_t offset) {
  std::string out{to_string(code)};
  out += ": ";
  out += message;
  if (offset != Error::npos) {
    out += " (at offset ";
    out += std::to_string(offset);
    out += ")";
  }
  return out;
}
}  // namespace

Error::Error(ErrorCode code, const std::string& message, std::size_t offset)
    : std::runtime_error(format_message(code, message, offset)), code_(code), offset_(offset) {}

}  // namespace xsum
