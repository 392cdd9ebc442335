#include "phomo/error.hpp"

namespace phomo {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kAntipodal: return "AntipodalError";
    case ErrorCode::kNotIlluminated: return "NotIlluminated";
    case ErrorCode::kNotVisible: return "NotVisible";
    case ErrorCode::kBehindCamera: return "BehindCamera";
    case ErrorCode::kCoincidentLandmarks: return "CoincidentLandmarks";
    case ErrorCode::kDuplicateKey: return "DuplicateKey";
    case ErrorCode::kMissingKey: return "MissingKey";
    case ErrorCode::kSingularSystem: return "SingularSystem";
    case ErrorCode::kSpecError: return "SpecError";
    case ErrorCode::kDegenerateHull: return "DegenerateHull";
    case ErrorCode::kDegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::kCheirality: return "CheiralityError";
    case ErrorCode::kDegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorCode::kEmptyTrack: return "EmptyTrack";
    case ErrorCode::kEmptyMask: return "EmptyMask";
    case ErrorCode::kConfigError: return "ConfigError";
    case ErrorCode::kDataError: return "DataError";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Error";
}

}  // namespace phomo
