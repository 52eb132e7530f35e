#include "slq/errors.hpp"

namespace slq {

const char* to_string(ErrorCode code)
{
    switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NonSymmetric: return "NonSymmetric";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::NonPositiveBudget: return "NonPositiveBudget";
    case ErrorCode::ZeroAnchor: return "ZeroAnchor";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::PositivityLost: return "PositivityLost";
    case ErrorCode::StepUnstable: return "StepUnstable";
    case ErrorCode::NotDeterministic: return "NotDeterministic";
    case ErrorCode::RegressionSingular: return "RegressionSingular";
    case ErrorCode::BasisTooSmall: return "BasisTooSmall";
    case ErrorCode::GramSingularEquality: return "GramSingularEquality";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::VInversionDrift: return "VInversionDrift";
    case ErrorCode::EqualityInfeasible: return "EqualityInfeasible";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::GramSingular: return "GramSingular";
    case ErrorCode::SeedCollision: return "SeedCollision";
    case ErrorCode::NonFiniteState: return "NonFiniteState";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, std::string module, const std::string& message)
    : std::runtime_error("[" + module + "] " + to_string(code) + ": " + message),
      code_(code),
      module_(std::move(module))
{
}

int exit_code_for(ErrorCode code)
{
    switch (code) {
    case ErrorCode::DimensionMismatch:
    case ErrorCode::NonSymmetric:
    case ErrorCode::NotPositiveDefinite:
    case ErrorCode::NonPositiveBudget:
    case ErrorCode::ZeroAnchor:
    case ErrorCode::ParseError:
    case ErrorCode::InvalidConfig:
    case ErrorCode::GramSingularEquality:
    case ErrorCode::SeedCollision:
    case ErrorCode::BasisTooSmall:
    case ErrorCode::NotDeterministic:
        return 2;
    case ErrorCode::Infeasible:
    case ErrorCode::EqualityInfeasible:
        return 3;
    case ErrorCode::PositivityLost:
    case ErrorCode::StepUnstable:
    case ErrorCode::RegressionSingular:
    case ErrorCode::VInversionDrift:
    case ErrorCode::NoConvergence:
    case ErrorCode::GramSingular:
    case ErrorCode::NonFiniteState:
        return 4;
    }
    return 4;
}

}  // namespace slq
