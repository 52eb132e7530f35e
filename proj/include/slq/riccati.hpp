#pragma once

#include "slq/problem.hpp"

#include <iosfwd>
#include <vector>

namespace slq {

/// Node values of the Riccati solution and its gains.
struct RiccatiSolution {
    TimeGrid grid;
    std::vector<Matrix> P;        // n×n, symmetric
    std::vector<Matrix> S;        // m×m, S = I + DᵀPD
    std::vector<Matrix> L;        // m×n, L = Fᵀ + BᵀP + DᵀPC
    std::vector<Matrix> S_inv;    // m×m
    std::vector<Matrix> S_inv_L;  // m×n
    std::vector<double> S_min_eig;
    double eps_S = 0.0;           // min over nodes of the smallest eigenvalue of S

    int nodes() const { return static_cast<int>(P.size()); }
};

inline constexpr double kPositivityTolerance = 1e-10;

/// Integrates −Ṗ = E + PA + AᵀP + CᵀPC − LᵀS⁻¹L, P(T) = M backward with classical RK4
/// on the problem grid, symmetrizing after every step.
/// Throws PositivityLost if S loses positivity, StepUnstable on blow-up.
RiccatiSolution solve_riccati(const SlqProblem& p);

/// True iff S(t_k) ⪰ eps·Id at every node.
bool check_uniform_positivity(const RiccatiSolution& sol, double eps);

/// CSV rows: t, vec(P) in column-major order, eigmin(S).
void write_riccati_csv(const RiccatiSolution& sol, std::ostream& os);

}  // namespace slq
