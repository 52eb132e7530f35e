#pragma once

#include "slq/bsde.hpp"

#include <string>
#include <vector>

namespace slq {

/// J̃(λ) = const_term + ⟨lin, λ⟩ − ⟨Γλ, λ⟩ with lin = 2(intercept − a) and
/// δ(λ) = intercept − Γλ, intercept_i = ⟨ξ, E R_i(s)⟩ − E∫⟨S⁻¹ψ, ρ_i⟩dt.
struct DualQuadratic {
    double const_term = 0.0;
    Vector lin;
    Matrix gram;
    Vector intercept;
    Vector a;
    int l_prime = 0;

    int l() const { return static_cast<int>(a.size()); }
};

DualQuadratic assemble_dual(const SlqProblem& p, const RiccatiSolution& ric, const BsdeSolution& bsde);
/// Same quadratic with different budgets.
DualQuadratic with_budgets(const DualQuadratic& dq, const Vector& a);

Vector delta(const DualQuadratic& dq, const Vector& lambda);
double dual_value(const DualQuadratic& dq, const Vector& lambda);

/// 1 + |a|∞ + trace(Γ)/l.
double residual_scale(const DualQuadratic& dq);

struct KktResiduals {
    Vector negativity;       // max(−λ_i, 0) for inequalities, 0 for equalities
    Vector feasibility;      // max(δ_i − a_i, 0) for inequalities, |δ_i − a_i| for equalities
    Vector complementarity;  // |λ_i (δ_i − a_i)|

    double max() const;
};

KktResiduals kkt_residuals(const DualQuadratic& dq, const Vector& lambda);

struct DualOptions {
    int enumeration_limit = 12;
    long max_iterations = 1000000;
    double tolerance = 1e-10;
};

struct DualSolution {
    Vector lambda;
    std::vector<int> active;  // inequality indices with λ_i > 0
    double value = 0.0;
    KktResiduals residuals;
    bool unique = false;
    std::string method;
};

/// Maximizes J̃ over λ_i ≥ 0 (i < l′), λ_i free (i ≥ l′). Enumerates the 2^{l′} sign
/// patterns in increasing bit order and returns the first one satisfying KKT; larger
/// problems use accelerated projected gradient ascent.
/// Throws EqualityInfeasible or NoConvergence.
DualSolution solve_dual(const DualQuadratic& dq, const DualOptions& opts = {});

/// Same maximizer through the projection of Γ^{-1/2}(intercept − a) onto Γ^{1/2}U₀.
/// Throws GramSingular if Γ is not invertible.
DualSolution project_solve(const DualQuadratic& dq, const DualOptions& opts = {});

}  // namespace slq
