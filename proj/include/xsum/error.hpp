#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace xsum {

enum class ErrorCode {
  MalformedXml,
  EmptyDocument,
  BadMagic,
  UnsupportedVersion,
  TruncatedInput,
  NotAncestor,
  SummaryMismatch,
  UnknownPath,
  CorruptStore,
  VersionMismatch,
  SyntaxError,
  UnsupportedFeature,
  InvariantViolation,
  TupleExplosion,
  UnsortedInput,
  MissingColumn,
  Unsatisfiable,
  OutOfBudget,
  SpecTooLarge,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the engine. `offset` carries a byte or character
/// position for parse errors and is npos otherwise.
class Error : public std::runtime_error {
 public:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  Error(ErrorCode code, const std::string& message, std::size_t offset = npos);

  ErrorCode code() const noexcept { return code_; }
  std::size_t offset() const noexcept { return offset_; }

 private:
  ErrorCode code_;
  std::size_t offset_;
};

}  // namespace xsum
