#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace selfnet {

enum class ErrorCode {
  BadMagic,
  VersionUnsupported,
  TruncatedPayload,
  NonFiniteValue,
  InvalidArgument,
  DimensionMismatch,
  PoolTooSmall,
  TauOutOfRange,
  ReferenceSetMismatch,
  EmptyMatrix,
  ChainTooShort,
  IncompleteFamily,
  TooFewFamilies,
  NoSelfMembers,
  NoTaskMembers,
  TooFewSamples,
  BadDirection,
  InfeasibleSpec,
  TooLarge,
  ConfigError,
  IoError,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries one of the codes above so
// callers (and tests) can branch on the kind of failure, not the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace selfnet
