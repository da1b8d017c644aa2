#include "selfnet/error.hpp"

namespace selfnet {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::VersionUnsupported: return "VersionUnsupported";
    case ErrorCode::TruncatedPayload: return "TruncatedPayload";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::PoolTooSmall: return "PoolTooSmall";
    case ErrorCode::TauOutOfRange: return "TauOutOfRange";
    case ErrorCode::ReferenceSetMismatch: return "ReferenceSetMismatch";
    case ErrorCode::EmptyMatrix: return "EmptyMatrix";
    case ErrorCode::ChainTooShort: return "ChainTooShort";
    case ErrorCode::IncompleteFamily: return "IncompleteFamily";
    case ErrorCode::TooFewFamilies: return "TooFewFamilies";
    case ErrorCode::NoSelfMembers: return "NoSelfMembers";
    case ErrorCode::NoTaskMembers: return "NoTaskMembers";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::BadDirection: return "BadDirection";
    case ErrorCode::InfeasibleSpec: return "InfeasibleSpec";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace selfnet
