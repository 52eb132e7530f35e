#pragma once

#include "slq/errors.hpp"
#include "slq/grid.hpp"
#include "slq/random_field.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace slq {

enum class ConstraintKind { Inequality, Equality };

/// E[∫⟨X, α⟩ + ⟨u, β⟩ dt + ⟨X(T), γ⟩] ≤ a (or = a).
struct Constraint {
    RandomField alpha;
    RandomField beta;
    RandomField gamma;
    double a = 0.0;
    ConstraintKind kind = ConstraintKind::Inequality;
    std::string name;

    Constraint scaled(double c) const;
};

/// dX = (AX + Bu)dt + (CX + Du)dB, X(s) = ξ, with cost
/// E[∫ XᵀEX + 2XᵀFu + 2XᵀG + uᵀIu + 2uᵀK dt + X(T)ᵀMX(T) + 2X(T)ᵀN].
struct SlqProblem {
    TimeGrid grid;
    Vector xi;
    MatrixFunction A, B, C, D;
    MatrixFunction E, F, I;
    Matrix M;
    RandomField G, K, N;
    std::vector<Constraint> constraints;

    Eigen::Index n() const { return xi.size(); }
    Eigen::Index m() const { return B.cols(); }
    int l() const { return static_cast<int>(constraints.size()); }
    /// Number of inequality constraints; they occupy indices [0, l_prime).
    int l_prime() const;

    /// Stable reordering so every inequality precedes every equality.
    void normalize_constraints();
    Vector budgets() const;
    void set_budgets(const Vector& a);

    /// Copy on a grid with a different step count.
    SlqProblem with_steps(int N) const;
};

struct ValidationCheck {
    std::string name;
    bool passed = true;
    double witness = 0.0;
    std::string detail;
    ErrorCode code = ErrorCode::InvalidConfig;
};

struct ValidationReport {
    std::vector<ValidationCheck> checks;

    bool ok() const;
    /// Throws the first failed check as an Error.
    void throw_if_failed() const;
    std::string summary() const;
};

/// Structural and convexity checks: dimensions, symmetry of E, I, M, E ⪰ 0, M ⪰ 0,
/// I ≻ ε_I, and the Schur complement E − F I⁻¹ Fᵀ ⪰ 0 at every grid node.
/// Dimension mismatches throw immediately; the rest are reported.
ValidationReport validate_problem(const SlqProblem& p);

inline constexpr double kMinControlWeight = 1e-10;

/// count inequality constraints ⟨X(T), γ̂_j⟩ ≤ a0 with E[γ̂_j] = 0 and Var(γ̂_j) = a0
/// under B(T) ~ N(0, T). γ̂_j = c_j · B(T)^{2j−1} · e_j where e_j is a unit vector
/// (fixed for n = 1, otherwise drawn from the seed).
std::vector<Constraint> build_variance_constraints(Eigen::Index n, Eigen::Index m, const TimeGrid& grid, int count,
                                                   double a0, std::uint64_t seed);

struct QuadraticWeights {
    Matrix E;  // n×n, ⪰ 0
    Matrix I;  // m×m, ≻ 0
    Matrix M;  // n×n, ⪰ 0
};

struct Anchor {
    RandomField alpha;
    RandomField beta;
    RandomField gamma;
};

/// E[∫ α̃ᵀẼα̃ + β̃ᵀĨβ̃ dt + γ̃ᵀM̃γ̃] evaluated by Gauss-Hermite in B and Simpson in t.
double anchor_energy(const QuadraticWeights& w, const Anchor& anchor, const TimeGrid& grid);

/// One constraint ⟨X, Ẽα̃⟩ + ⟨u, Ĩβ̃⟩ + ⟨X(T), M̃γ̃⟩ ≤ a0 per anchor, each anchor rescaled
/// by √(a0/Θ) onto the level set Θ = a0.
std::vector<Constraint> build_quadratic_constraints(const QuadraticWeights& w, const std::vector<Anchor>& anchors,
                                                    double a0, const TimeGrid& grid);

struct HermiteRule {
    Vector nodes;
    Vector weights;
};

/// 80-point probabilists' Gauss-Hermite rule (Golub-Welsch); weights sum to 1.
const HermiteRule& hermite_rule();

/// E[noise(B_t)^2]-type Gaussian expectation: E[f(Z·√var)] for Z ~ N(0,1).
double gaussian_expectation(double variance, const std::function<double(double)>& f);

}  // namespace slq
