#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace audioad {

enum class ErrorCode {
  kMalformedContainer,
  kUnsupportedEncoding,
  kEmptyAudio,
  kIoFailure,
  kInvalidArgument,
  kNFftNotPowerOfTwo,
  kSignalTooShort,
  kTooShortForProfile,
  kProfileMismatch,
  kLengthMismatch,
  kFrameTooShort,
  kDegenerateFilter,
  kEmptyDataset,
  kNotBinary,
  kEmptyClass,
  kSchemaMismatch,
  kLabelOutOfRange,
  kEmptyMatrix,
  kClassTooSmall,
  kConfigError,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace audioad
