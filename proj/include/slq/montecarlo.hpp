#pragma once

#include "slq/bsde.hpp"
#include "slq/dual.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

namespace slq {

struct ClosedLoopRun {
    TimeGrid grid;
    Eigen::Index n_paths = 0;
    std::uint64_t seed = 0;
    Vector J_samples;           // realized cost per path
    Matrix constraint_samples;  // n_paths × l, realized constraint functionals
    // Trajectories of the first kept paths, one (N+1)-row matrix per path.
    std::vector<Matrix> X_paths, u_paths;
    std::vector<Vector> B_paths;
};

struct SimulationOptions {
    Eigen::Index keep_paths = 0;
    Execution exec = Execution::Parallel;
    std::optional<std::uint64_t> training_seed;
};

/// ψ + Σ λ_i ρ_i as one surrogate.
SurrogatePath combined_offset(const BsdeSolution& bsde, const Vector& lambda);

/// Euler–Maruyama on the state equation under u = −S⁻¹(LX + ψ̂ + Σ λ_i ρ̂_i).
/// Throws SeedCollision when the ensemble reuses the training seed, NonFiniteState on blow-up.
ClosedLoopRun simulate_closed_loop(const SlqProblem& p, const RiccatiSolution& ric, const BsdeSolution& bsde,
                                   const Vector& lambda, const BrownianEnsemble& ens, const SimulationOptions& opts);

struct Estimate {
    double mean = 0.0;
    double se = 0.0;
};

Estimate sample_estimate(const Eigen::Ref<const Vector>& samples);

Estimate estimate_cost(const ClosedLoopRun& run);

enum class ConstraintStatus { Active, Slack, Violated };
const char* to_string(ConstraintStatus s);

struct ConstraintEstimate {
    Estimate value;
    double a = 0.0;
    ConstraintKind kind = ConstraintKind::Inequality;
    ConstraintStatus status = ConstraintStatus::Slack;
};

/// Discretization allowance c·dt added to every 3-SE band.
inline constexpr double kAllowanceFactor = 2.0;

/// Active if |est − a| ≤ 3 SE + allowance; slack if below that band; violated otherwise
/// (equalities are active or violated).
std::vector<ConstraintEstimate> estimate_constraints(const ClosedLoopRun& run, const SlqProblem& p);

struct VerificationReport {
    Estimate J;
    std::vector<ConstraintEstimate> constraints;
    double dual_value = 0.0;
    double dual_se = 0.0;
    double gap = 0.0;
    double gap_se = 0.0;
    double allowance = 0.0;
    bool gap_ok = false;
    bool feasible = false;
    bool complementary = false;

    bool pass() const { return gap_ok && feasible && complementary; }
};

/// gap = Ĵ − J̃(λ*), combined SE = sqrt(SE_J² + dual_se²); passes iff |gap| ≤ 3 SE + allowance.
VerificationReport duality_gap(const ClosedLoopRun& run, const SlqProblem& p, const DualQuadratic& dq,
                               const DualSolution& sol, double dual_se = 0.0);

/// CSV rows path, t, X_1.., u_1.., B for the kept trajectories.
void write_paths_csv(const ClosedLoopRun& run, std::ostream& os);

}  // namespace slq
