#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace reid {

enum class ErrorCode {
    MalformedHeader,
    DimensionMismatch,
    NonFiniteValue,
    IoFailure,
    InvalidParam,
    KTooLarge,
    SizeMismatch,
    DegenerateRow,
    EmptyPool,
    NegativeEps,
    DegenerateBatch,
    BadTarget,
    NonFiniteOutput,
    TooFewIdentities,
    NonFiniteLoss,
    AdaptationCollapsed,
    MissingCamera,
    ShapeMismatch,
    EmptySource,
    InvalidSpec,
};

/// Upper-snake name of the code, e.g. "K_TOO_LARGE". Used verbatim on stderr by the CLI.
std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& detail)
        : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace reid
