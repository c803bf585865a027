#include "audioad/error.hpp"

namespace audioad {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMalformedContainer: return "MalformedContainer";
    case ErrorCode::kUnsupportedEncoding: return "UnsupportedEncoding";
    case ErrorCode::kEmptyAudio: return "EmptyAudio";
    case ErrorCode::kIoFailure: return "IoFailure";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kNFftNotPowerOfTwo: return "NFftNotPowerOfTwo";
    case ErrorCode::kSignalTooShort: return "SignalTooShort";
    case ErrorCode::kTooShortForProfile: return "TooShortForProfile";
    case ErrorCode::kProfileMismatch: return "ProfileMismatch";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kFrameTooShort: return "FrameTooShort";
    case ErrorCode::kDegenerateFilter: return "DegenerateFilter";
    case ErrorCode::kEmptyDataset: return "EmptyDataset";
    case ErrorCode::kNotBinary: return "NotBinary";
    case ErrorCode::kEmptyClass: return "EmptyClass";
    case ErrorCode::kSchemaMismatch: return "SchemaMismatch";
    case ErrorCode::kLabelOutOfRange: return "LabelOutOfRange";
    case ErrorCode::kEmptyMatrix: return "EmptyMatrix";
    case ErrorCode::kClassTooSmall: return "ClassTooSmall";
    case ErrorCode::kConfigError: return "ConfigError";
  }
  return "Unknown";
}

}  // namespace audioad
