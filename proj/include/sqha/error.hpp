#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sqha {

// Machine-readable failure classes. The CLI maps these to exit codes:
// config errors exit 2, numerical-regime errors exit 3, non-convergence 4.
enum class ErrorCode {
    ConfigError,
    InvalidField,
    NotConfining,
    InfiniteCorrelation,
    UnresolvedCorrelation,
    NoiseTooStrong,
    DegenerateDenominator,
    NonConvergence,
};

inline constexpr std::string_view to_string(ErrorCode c) {
    switch (c) {
        case ErrorCode::ConfigError:           return "CONFIG_ERROR";
        case ErrorCode::InvalidField:          return "INVALID_FIELD";
        case ErrorCode::NotConfining:          return "NOT_CONFINING";
        case ErrorCode::InfiniteCorrelation:   return "INFINITE_CORRELATION";
        case ErrorCode::UnresolvedCorrelation: return "UNRESOLVED_CORRELATION";
        case ErrorCode::NoiseTooStrong:        return "NOISE_TOO_STRONG";
        case ErrorCode::DegenerateDenominator: return "DEGENERATE_DENOMINATOR";
        case ErrorCode::NonConvergence:        return "NON_CONVERGENCE";
    }
    return "UNKNOWN";
}

inline constexpr int exit_code(ErrorCode c) {
    switch (c) {
        case ErrorCode::ConfigError:
        case ErrorCode::InvalidField:
        case ErrorCode::NotConfining:
            return 2;
        case ErrorCode::InfiniteCorrelation:
        case ErrorCode::UnresolvedCorrelation:
        case ErrorCode::NoiseTooStrong:
        case ErrorCode::DegenerateDenominator:
            return 3;
        case ErrorCode::NonConvergence:
            return 4;
    }
    return 1;
}

class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, std::string module, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + " [" + module + "] " + message),
          code_(code),
          module_(std::move(module)) {}

    ErrorCode code() const noexcept { return code_; }
    const std::string& module() const noexcept { return module_; }

  private:
    ErrorCode code_;
    std::string module_;
};

}  // namespace sqha
