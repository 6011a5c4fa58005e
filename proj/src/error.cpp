#include "drama/error.hpp"

namespace drama {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Inconsistent: return "Inconsistent";
    case ErrorKind::Underdetermined: return "Underdetermined";
    case ErrorKind::UnknownPreset: return "UnknownPreset";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::UnknownPin: return "UnknownPin";
    case ErrorKind::RegionTooSmall: return "RegionTooSmall";
    case ErrorKind::NoGapFound: return "NoGapFound";
    case ErrorKind::NoFunctionsFound: return "NoFunctionsFound";
    case ErrorKind::InvalidFraming: return "InvalidFraming";
    case ErrorKind::ClockLost: return "ClockLost";
    case ErrorKind::NoTemplateFound: return "NoTemplateFound";
    case ErrorKind::NoPairsFound: return "NoPairsFound";
    case ErrorKind::Parse: return "Parse";
  }
  return "Unknown";
}

}  // namespace drama
