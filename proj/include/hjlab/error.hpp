#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hjlab {

enum class ErrorCode {
    NonIntegerDimension,
    ExponentOutOfRange,
    RegimeMismatch,
    SingularPoint,
    FreeBoundary,
    DecayTooSlow,
    NotApplicable,
    HypothesisViolated,
    Diverged,
    InsufficientPoints,
    NonPositiveValues,
    InitialOrderingFails,
    WrongRegime,
    EmptySupport,
    Config,
};

std::string_view to_string(ErrorCode code);

/// Library-wide exception; the code lets callers branch without parsing text.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace hjlab
