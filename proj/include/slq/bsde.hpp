#pragma once

#include "slq/brownian.hpp"
#include "slq/problem.hpp"
#include "slq/regression.hpp"
#include "slq/riccati.hpp"

#include <vector>

namespace slq {

/// weight(t_k)·field(t_k, B) contribution to a BSDE driver.
struct DriverTerm {
    std::vector<Matrix> weight;  // per node, n × field.dim()
    RandomField field;
};

/// One n-vector BSDE −dY = (Ay Y + Az Z + Σ driver) dt − Z dB, Y(T) = terminal.
struct LinearBsdeSystem {
    RandomField terminal;
    std::vector<DriverTerm> driver;
};

struct LinearBsdeResult {
    std::vector<SurrogatePath> Y;
    std::vector<SurrogatePath> Z;
};

/// Least-squares Monte Carlo backward induction for several systems sharing Ay, Az.
/// Y uses the trapezoidal θ = ½ step (implicit in Y through a linear solve), Z the
/// one-step identity Z_k = E[Y_{k+1} ΔB_k | 𝓕_k]/dt. Both regressions carry martingale
/// control variates built from Y_{k+1} and Z_{k+1} evaluated at B_k.
LinearBsdeResult solve_linear_bsde(const TimeGrid& grid, const BrownianEnsemble& ens, const Basis& basis,
                                   const std::vector<Matrix>& Ay, const std::vector<Matrix>& Az,
                                   const std::vector<LinearBsdeSystem>& systems, Execution exec);

/// The same trapezoidal recursion on deterministic data (Z ≡ 0).
LinearBsdeResult solve_linear_ode(const TimeGrid& grid, const std::vector<Matrix>& Ay,
                                  const std::vector<LinearBsdeSystem>& systems);

/// Points and weights representing the law of B(t_k) at every node: one point per row,
/// one node per column, weights summing to 1.
struct Marginals {
    Matrix b;
    Vector w;

    /// The ensemble itself (sample mean over paths).
    static Marginals from_paths(const BrownianEnsemble& ens);
    /// Gauss-Hermite points of B(t_k) ~ N(0, t_k).
    static Marginals gaussian(const TimeGrid& grid);
    /// A single point b = 0 (deterministic data).
    static Marginals origin(const TimeGrid& grid);
};

/// How expectations of surrogates (R0, Γ, cross terms) are taken.
enum class MomentRule { Gaussian, PathAverage };

struct BsdeSolution {
    TimeGrid grid;
    Basis basis;
    SurrogatePath Q, pi, psi;
    std::vector<SurrogatePath> R, r, rho;
    Vector Q0;   // E[Q(s)]
    Matrix R0;   // l × n, rows E[R_i(s)]
    Matrix gram;         // Γ_ij = E∫ ρ_iᵀ S⁻¹ ρ_j dt
    Vector cross;        // E∫ ρ_iᵀ S⁻¹ ψ dt
    double psi_energy = 0.0;  // E∫ ψᵀ S⁻¹ ψ dt
    bool analytic = false;

    int l() const { return static_cast<int>(R.size()); }
};

/// Deterministic data only: the BSDEs reduce to backward ODEs. Throws NotDeterministic.
BsdeSolution solve_bsde_analytic(const SlqProblem& p, const RiccatiSolution& ric);

/// Surrogates depend on B(t_k) only, so their moments are exact Gaussian integrals by
/// default; MomentRule::PathAverage averages over the training paths instead.
BsdeSolution solve_bsde_lsmc(const SlqProblem& p, const RiccatiSolution& ric, const BrownianEnsemble& ens,
                             const Basis& basis, Execution exec = Execution::Parallel,
                             MomentRule moments = MomentRule::Gaussian);

/// Control-only form of the constraints: ⟨u, ρ̃_i⟩ ≤ ã_i (= for equalities).
struct ReducedConstraints {
    std::vector<SurrogatePath> rho_tilde;
    Vector a_tilde;
    Matrix R0_tilde;  // l × n
    Matrix gram;      // E∫ ρ̃_iᵀ ρ̃_j dt
    int l_prime = 0;
};

/// Solves −dR̃ = (AᵀR̃ + Cᵀr̃ + α) dt − r̃ dB, R̃(T) = γ for every constraint.
ReducedConstraints reduce_constraints(const SlqProblem& p, const BrownianEnsemble& ens, const Basis& basis,
                                      Execution exec = Execution::Parallel,
                                      MomentRule moments = MomentRule::Gaussian);
/// Deterministic-data variant.
ReducedConstraints reduce_constraints_analytic(const SlqProblem& p);

struct GramReport {
    Matrix gamma;
    double eigmin = 0.0;
    bool independent = false;
};

inline constexpr double kRankTolerance = 1e-8;

GramReport gram_and_invertibility(const BsdeSolution& sol);

/// E∫ U_iᵀ W U_j dt over the listed surrogates (trapezoid over nodes, weighted mean over
/// the marginal points).
Matrix integrate_inner_products(const std::vector<const SurrogatePath*>& paths, const std::vector<Matrix>& weight,
                                const Marginals& marg, Execution exec);

/// Weighted mean of the surrogate at node k.
Vector node_mean(const SurrogatePath& path, int k, const Marginals& marg, Execution exec);

}  // namespace slq
