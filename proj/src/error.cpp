#include "hjlab/error.hpp"

namespace hjlab {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::NonIntegerDimension: return "NonIntegerDimension";
        case ErrorCode::ExponentOutOfRange: return "ExponentOutOfRange";
        case ErrorCode::RegimeMismatch: return "RegimeMismatch";
        case ErrorCode::SingularPoint: return "SingularPoint";
        case ErrorCode::FreeBoundary: return "FreeBoundary";
        case ErrorCode::DecayTooSlow: return "DecayTooSlow";
        case ErrorCode::NotApplicable: return "NotApplicable";
        case ErrorCode::HypothesisViolated: return "HypothesisViolated";
        case ErrorCode::Diverged: return "Diverged";
        case ErrorCode::InsufficientPoints: return "InsufficientPoints";
        case ErrorCode::NonPositiveValues: return "NonPositiveValues";
        case ErrorCode::InitialOrderingFails: return "InitialOrderingFails";
        case ErrorCode::WrongRegime: return "WrongRegime";
        case ErrorCode::EmptySupport: return "EmptySupport";
        case ErrorCode::Config: return "ConfigError";
    }
    return "Unknown";
}

}  // namespace hjlab
