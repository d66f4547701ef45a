#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace invpred {

enum class ErrorKind {
    InvalidArgument,
    DimensionMismatch,
    NotPositiveDefinite,
    SingularGram,
    SingularKernel,
    RankDeficientFeatures,
    DegenerateObservation,
    QuadratureNotConverged,
    TooManyUndefined,
    InvalidSpec,
    ConfigError,
    IoError,
};

constexpr std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidArgument: return "InvalidArgument";
        case ErrorKind::DimensionMismatch: return "DimensionMismatch";
        case ErrorKind::NotPositiveDefinite: return "NotPositiveDefinite";
        case ErrorKind::SingularGram: return "SingularGram";
        case ErrorKind::SingularKernel: return "SingularKernel";
        case ErrorKind::RankDeficientFeatures: return "RankDeficientFeatures";
        case ErrorKind::DegenerateObservation: return "DegenerateObservation";
        case ErrorKind::QuadratureNotConverged: return "QuadratureNotConverged";
        case ErrorKind::TooManyUndefined: return "TooManyUndefined";
        case ErrorKind::InvalidSpec: return "InvalidSpec";
        case ErrorKind::ConfigError: return "ConfigError";
        case ErrorKind::IoError: return "IoError";
    }
    return "Unknown";
}

// Single exception type for the library; callers dispatch on kind().
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

// Measure-zero data degeneracies; the risk engine counts these as undefined samples.
inline bool is_degeneracy(ErrorKind kind) {
    return kind == ErrorKind::NotPositiveDefinite || kind == ErrorKind::SingularGram ||
           kind == ErrorKind::SingularKernel || kind == ErrorKind::DegenerateObservation;
}

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

inline void require(bool condition, ErrorKind kind, const char* message) {
    if (!condition) throw Error(kind, message);
}

}  // namespace invpred
