#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace xmf {

enum class ErrorCode {
  InvalidArgument,
  NonPositiveDepth,
  InvalidDepth,
  OutOfBounds,
  GeometryMissing,
  NoValidDepth,
  DegenerateTranslation,
  DegenerateTransform,
  DimensionMismatch,
  MissingAuxiliary,
  InsufficientData,
  InsufficientMatches,
  NoModel,
  DegenerateConfiguration,
  CheiralityAmbiguous,
  Diverged,
  ExternalRefinerProtocol,
  ManifestInvalid,
  EmptySet,
  IoFailure,
};

std::string_view to_string(ErrorCode code);

// All recoverable failures in the library surface as xmf::Error; the code
// lets batch drivers decide whether a failure is per-item or fatal.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

}  // namespace xmf
