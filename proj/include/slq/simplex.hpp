#pragma once

#include "slq/linalg.hpp"

namespace slq {

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpResult {
    LpStatus status = LpStatus::Infeasible;
    Vector x;
    double objective = 0.0;
};

/// maximize cᵀx subject to A_ub x ≤ b_ub and A_eq x = b_eq, x free.
/// Dense two-phase tableau simplex with Bland's rule; meant for a handful of variables.
LpResult solve_lp(const Vector& c, const Matrix& A_ub, const Vector& b_ub, const Matrix& A_eq, const Vector& b_eq,
                  double tol = 1e-10);

}  // namespace slq
