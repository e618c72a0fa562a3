#pragma once

#include <stdexcept>
#include <string>

namespace kerrsol {

enum class ErrorCode {
    InvalidArgument,
    PowerDrift,
    StrideMismatch,
    NoConvergence,
    TrivialSolution,
    NonlinearityLeak,
    BasisMismatch,
    EmptyDetector,
    SpectralResidual,
    ConfigError,
    IoError,
};

const char* to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries a machine-readable code.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace kerrsol
