#pragma once

#include "slq/bsde.hpp"
#include "slq/config.hpp"
#include "slq/dual.hpp"
#include "slq/montecarlo.hpp"
#include "slq/slater.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace slq {

enum class Command { Solve, Verify, Sweep };

struct SweepAxis {
    int index = 0;  // 0-based constraint index
    double lo = 0.0, hi = 0.0, step = 1.0;

    std::vector<double> values() const;
};

/// "a1=lo:hi:step,a2=lo:hi:step" (1-based constraint indices).
std::vector<SweepAxis> parse_sweep(const std::string& spec);

struct RunConfig {
    std::string problem_path;
    Command command = Command::Solve;
    std::optional<long> paths;
    std::optional<int> steps;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> basis;
    std::string sweep_spec;
    std::string out_dir = ".";
    bool dump_riccati = false;
    bool dump_coefficients = false;
    long dump_paths = 0;
    Execution exec = Execution::Parallel;
    int se_batches = 10;
    bool quiet = false;
};

inline constexpr long kDefaultPaths = 100000;
inline constexpr std::uint64_t kDefaultSeed = 1;
inline constexpr long kMinVerifyPaths = 1000;

/// Settings after merging command-line overrides with the problem file's [solver] table.
struct ResolvedSettings {
    long paths = kDefaultPaths;
    std::uint64_t seed = kDefaultSeed;
    Basis basis = Basis::standard();
    Execution exec = Execution::Parallel;
};

/// Every budget-independent stage of the pipeline.
struct Artifacts {
    SlqProblem problem;
    ResolvedSettings settings;
    RiccatiSolution riccati;
    BsdeSolution bsde;
    ReducedConstraints reduced;
    GramReport gram;
    DualQuadratic dual;
    std::string backend;  // "analytic" or "lsmc"
};

/// Validation, Riccati, BSDE (analytic when all data are deterministic, LSMC otherwise),
/// constraint reduction and the dual quadratic.
Artifacts prepare(const SlqProblem& p, const ResolvedSettings& s);

/// Reduced budgets ã = a − R̃(s)ξ for a budget vector a.
Vector reduced_budgets(const Artifacts& art, const Vector& a);

/// Standard error of the optimal dual value from independent training sub-ensembles.
double dual_standard_error(const SlqProblem& p, const ResolvedSettings& s, const RiccatiSolution& ric, int batches);

/// Seed of the out-of-sample verification ensemble.
std::uint64_t verification_seed(std::uint64_t training_seed);

struct SolveOutcome {
    Artifacts artifacts;
    SlaterWitness witness;
    DualSolution solution;
    std::optional<double> projection_gap;  // |λ_solve − λ_project|∞ when Γ is invertible
};

SolveOutcome solve_problem(const SlqProblem& p, const ResolvedSettings& s);

struct VerifyOutcome {
    SolveOutcome solve;
    ClosedLoopRun run;
    VerificationReport report;
};

VerifyOutcome verify_problem(const SlqProblem& p, const ResolvedSettings& s, int se_batches, long keep_paths = 0);

struct SweepCell {
    Vector a;
    bool feasible = true;
    std::string error;
    DualSolution solution;
};

struct SweepOutcome {
    std::vector<SweepAxis> axes;
    std::vector<SweepCell> cells;  // last axis varies fastest
    bool monotone = true;
    bool flat = true;
    std::string summary;
};

SweepOutcome sweep_problem(const Artifacts& art, const std::vector<SweepAxis>& axes, Execution exec);

/// Command-line entry points: write reports under cfg.out_dir and return the exit status
/// (errors propagate as slq::Error).
int run_solve(const RunConfig& cfg);
int run_verify(const RunConfig& cfg);
int run_sweep(const RunConfig& cfg);

}  // namespace slq
