#include "xmf/error.hpp"

namespace xmf {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NonPositiveDepth: return "NonPositiveDepth";
    case ErrorCode::InvalidDepth: return "InvalidDepth";
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::GeometryMissing: return "GeometryMissing";
    case ErrorCode::NoValidDepth: return "NoValidDepth";
    case ErrorCode::DegenerateTranslation: return "DegenerateTranslation";
    case ErrorCode::DegenerateTransform: return "DegenerateTransform";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::MissingAuxiliary: return "MissingAuxiliary";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::InsufficientMatches: return "InsufficientMatches";
    case ErrorCode::NoModel: return "NoModel";
    case ErrorCode::DegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorCode::CheiralityAmbiguous: return "CheiralityAmbiguous";
    case ErrorCode::Diverged: return "Diverged";
    case ErrorCode::ExternalRefinerProtocol: return "ExternalRefinerProtocol";
    case ErrorCode::ManifestInvalid: return "ManifestInvalid";
    case ErrorCode::EmptySet: return "EmptySet";
    case ErrorCode::IoFailure: return "IoFailure";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace xmf
