#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace csl {

enum class ErrorCode {
    InvalidArgument,
    NonFinite,
    RankDeficient,
    NoConvergence,
    NotSymmetric,
    LengthNotPowerOfTwo,
    CountExceedsPopulation,
    AmbientMismatch,
    ZeroVector,
    UnequalDimUnsupported,
    BadDims,
    OddTargetDim,
    DimMismatch,
    DimensionCollapsed,
    TooLarge,
    AmbientTooSmall,
    DegenerateInput,
    InsufficientData,
    MissingBasis,
    DegenerateSpectrum,
    NonPositiveEigenvalue,
    EmptyBank,
    BadAffinity,
    DegenerateAtom,
    BadClusterCount,
    LengthMismatch,
    ParseError,
    ConfigError,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::NonFinite: return "NonFinite";
        case ErrorCode::RankDeficient: return "RankDeficient";
        case ErrorCode::NoConvergence: return "NoConvergence";
        case ErrorCode::NotSymmetric: return "NotSymmetric";
        case ErrorCode::LengthNotPowerOfTwo: return "LengthNotPowerOfTwo";
        case ErrorCode::CountExceedsPopulation: return "CountExceedsPopulation";
        case ErrorCode::AmbientMismatch: return "AmbientMismatch";
        case ErrorCode::ZeroVector: return "ZeroVector";
        case ErrorCode::UnequalDimUnsupported: return "UnequalDimUnsupported";
        case ErrorCode::BadDims: return "BadDims";
        case ErrorCode::OddTargetDim: return "OddTargetDim";
        case ErrorCode::DimMismatch: return "DimMismatch";
        case ErrorCode::DimensionCollapsed: return "DimensionCollapsed";
        case ErrorCode::TooLarge: return "TooLarge";
        case ErrorCode::AmbientTooSmall: return "AmbientTooSmall";
        case ErrorCode::DegenerateInput: return "DegenerateInput";
        case ErrorCode::InsufficientData: return "InsufficientData";
        case ErrorCode::MissingBasis: return "MissingBasis";
        case ErrorCode::DegenerateSpectrum: return "DegenerateSpectrum";
        case ErrorCode::NonPositiveEigenvalue: return "NonPositiveEigenvalue";
        case ErrorCode::EmptyBank: return "EmptyBank";
        case ErrorCode::BadAffinity: return "BadAffinity";
        case ErrorCode::DegenerateAtom: return "DegenerateAtom";
        case ErrorCode::BadClusterCount: return "BadClusterCount";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

/// Numerical degeneracies, as opposed to malformed input.
constexpr bool is_numerical(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::RankDeficient:
        case ErrorCode::NoConvergence:
        case ErrorCode::DimensionCollapsed:
        case ErrorCode::DegenerateSpectrum:
        case ErrorCode::NonPositiveEigenvalue:
            return true;
        default:
            return false;
    }
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, ErrorCode code, const std::string& what) {
    if (!cond) fail(code, what);
}

}  // namespace csl
