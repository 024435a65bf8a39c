// error.hpp: error kinds shared by every branchpoint-lab module

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bpl {

enum class ErrorKind {
    ParallelLevels,
    DegenerateToDP,
    NotSymmetric,
    NonFinite,
    AmbiguousMatch,
    OrthogonalStep,
    PathThroughEP,
    BadSpec,
    DegenerateBasis,
    GaugeMismatch,
    PresetPreconditionViolated,
    BranchNotClosed,
    NoConvergence,
};

constexpr std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::ParallelLevels: return "ParallelLevels";
    case ErrorKind::DegenerateToDP: return "DegenerateToDP";
    case ErrorKind::NotSymmetric: return "NotSymmetric";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::AmbiguousMatch: return "AmbiguousMatch";
    case ErrorKind::OrthogonalStep: return "OrthogonalStep";
    case ErrorKind::PathThroughEP: return "PathThroughEP";
    case ErrorKind::BadSpec: return "BadSpec";
    case ErrorKind::DegenerateBasis: return "DegenerateBasis";
    case ErrorKind::GaugeMismatch: return "GaugeMismatch";
    case ErrorKind::PresetPreconditionViolated: return "PresetPreconditionViolated";
    case ErrorKind::BranchNotClosed: return "BranchNotClosed";
    case ErrorKind::NoConvergence: return "NoConvergence";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

} // namespace bpl
