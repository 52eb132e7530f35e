#pragma once

#include <stdexcept>
#include <string>

namespace slq {

enum class ErrorCode {
    DimensionMismatch,
    NonSymmetric,
    NotPositiveDefinite,
    NonPositiveBudget,
    ZeroAnchor,
    ParseError,
    InvalidConfig,
    PositivityLost,
    StepUnstable,
    NotDeterministic,
    RegressionSingular,
    BasisTooSmall,
    GramSingularEquality,
    Infeasible,
    VInversionDrift,
    EqualityInfeasible,
    NoConvergence,
    GramSingular,
    SeedCollision,
    NonFiniteState,
};

const char* to_string(ErrorCode code);

/// Exception carrying a machine-readable code and the module that raised it.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, std::string module, const std::string& message);

    ErrorCode code() const noexcept { return code_; }
    const std::string& module() const noexcept { return module_; }

private:
    ErrorCode code_;
    std::string module_;
};

/// Process exit status for an error: 2 invalid input, 3 infeasible, 4 numerical failure.
int exit_code_for(ErrorCode code);

}  // namespace slq
