#pragma once

#include "slq/bsde.hpp"

namespace slq {

/// ū = Σ_j coefficients_j ρ̃_j with ⟨ū, ρ̃_i⟩ = values_i; margins_i = ã_i − values_i.
struct SlaterWitness {
    Vector coefficients;
    Vector values;
    Vector margins;
    double margin = 0.0;  // smallest inequality margin (the cap when there are none)
    double scale = 1.0;
};

inline constexpr double kSlaterMargin = 1e-6;

/// Searches the span of the reduced constraint vectors for a control meeting every
/// equality exactly and every inequality with margin ≥ kSlaterMargin·scale.
/// Throws GramSingularEquality when the equality rows are linearly dependent but
/// consistent, Infeasible otherwise.
SlaterWitness slater_check(const Matrix& gram, const Vector& a_tilde, int l_prime);
SlaterWitness slater_check(const ReducedConstraints& reduced);

}  // namespace slq
