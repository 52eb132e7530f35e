#include "support.hpp"

#include "slq/errors.hpp"
#include "slq/montecarlo.hpp"
#include "slq/pipeline.hpp"
#include "slq/riccati.hpp"

#include <doctest.h>

#include <random>
#include <sstream>

using namespace slq;

namespace {

struct Solved {
    SlqProblem p;
    RiccatiSolution ric;
    BsdeSolution bsde;
    DualQuadratic dq;
    DualSolution sol;
};

Solved solve(const SlqProblem& p, const BrownianEnsemble& train)
{
    Solved s{p, solve_riccati(p), {}, {}, {}};
    s.bsde = solve_bsde_lsmc(p, s.ric, train, Basis::standard());
    s.dq = assemble_dual(p, s.ric, s.bsde);
    s.sol = solve_dual(s.dq);
    return s;
}

}  // namespace

TEST_SUITE("montecarlo") {

TEST_CASE("sample estimate")
{
    const Vector x = (Vector(4) << 1.0, 2.0, 3.0, 6.0).finished();
    const Estimate e = sample_estimate(x);
    CHECK(e.mean == doctest::Approx(3.0));
    // sample variance 14/3
    CHECK(e.se == doctest::Approx(std::sqrt(14.0 / 3.0 / 4.0)));
}

TEST_CASE("constraint classification uses the 3 SE band plus allowance")
{
    SlqProblem p = test::load("ex1.toml", 100);
    ClosedLoopRun run;
    run.grid = p.grid;
    run.n_paths = 4;
    run.constraint_samples.resize(4, 2);
    run.constraint_samples.col(0).setConstant(0.5 + 0.019);
    run.constraint_samples.col(1).setConstant(0.5 - 0.5);
    auto est = estimate_constraints(run, p);
    CHECK(est[0].status == ConstraintStatus::Active);
    CHECK(est[1].status == ConstraintStatus::Violated);
    run.constraint_samples.col(0).setConstant(0.4);
    run.constraint_samples.col(1).setConstant(0.5);
    est = estimate_constraints(run, p);
    CHECK(est[0].status == ConstraintStatus::Slack);
    CHECK(est[1].status == ConstraintStatus::Active);
    run.constraint_samples.col(0).setConstant(0.6);
    CHECK(estimate_constraints(run, p)[0].status == ConstraintStatus::Violated);
}

TEST_CASE("reusing the training seed is refused")
{
    const SlqProblem p = test::load("ex2.toml", 20);
    const BrownianEnsemble train(p.grid, 3000, 77);
    const Solved s = solve(p, train);
    SimulationOptions so;
    so.training_seed = 77;
    try {
        simulate_closed_loop(p, s.ric, s.bsde, s.sol.lambda, train, so);
        FAIL("expected SeedCollision");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::SeedCollision);
    }
    CHECK(verification_seed(77) != 77);
}

TEST_CASE("rescaling a constraint leaves the optimal control unchanged")
{
    const SlqProblem p = test::load("ex2.toml", 50);
    SlqProblem q = p;
    q.constraints[0] = q.constraints[0].scaled(3.0);
    q.constraints[1] = q.constraints[1].scaled(0.25);
    const BrownianEnsemble train(p.grid, 20000, 31);
    const Solved a = solve(p, train);
    const Solved b = solve(q, train);
    CHECK(b.sol.lambda(0) == doctest::Approx(a.sol.lambda(0) / 3.0).epsilon(1e-8));
    CHECK(b.sol.value == doctest::Approx(a.sol.value).epsilon(1e-8));

    const BrownianEnsemble ens(p.grid, 5000, 32);
    SimulationOptions so;
    so.keep_paths = 20;
    const ClosedLoopRun ra = simulate_closed_loop(p, a.ric, a.bsde, a.sol.lambda, ens, so);
    const ClosedLoopRun rb = simulate_closed_loop(q, b.ric, b.bsde, b.sol.lambda, ens, so);
    double worst = 0.0;
    for (std::size_t j = 0; j < ra.u_paths.size(); ++j) {
        worst = std::max(worst, (ra.u_paths[j] - rb.u_paths[j]).cwiseAbs().maxCoeff());
    }
    CHECK(worst <= 1e-8);
    CHECK((ra.J_samples - rb.J_samples).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("weak duality: dual values at feasible multipliers stay below the primal cost")
{
    const SlqProblem p = test::load("ex2.toml", 100);
    const BrownianEnsemble train(p.grid, 20000, 41);
    const Solved s = solve(p, train);
    const BrownianEnsemble ens(p.grid, 20000, 42);
    const ClosedLoopRun run = simulate_closed_loop(p, s.ric, s.bsde, s.sol.lambda, ens, {});
    const VerificationReport rep = duality_gap(run, p, s.dq, s.sol);
    REQUIRE(rep.feasible);
    std::mt19937_64 rng(43);
    std::exponential_distribution<double> expo(1.0);
    for (int probe = 0; probe < 200; ++probe) {
        const Vector lambda = (Vector(2) << expo(rng), expo(rng)).finished();
        CHECK(dual_value(s.dq, lambda) <= rep.J.mean + 3.0 * rep.J.se + rep.allowance);
        CHECK(dual_value(s.dq, lambda) <= s.sol.value + 1e-12);
    }
}

TEST_CASE("closed-loop cost matches the dual value on the second example")
{
    const SlqProblem p = test::load("ex2.toml", 100);
    const BrownianEnsemble train(p.grid, 20000, 51);
    const Solved s = solve(p, train);
    const BrownianEnsemble ens(p.grid, 20000, 52);
    const ClosedLoopRun run = simulate_closed_loop(p, s.ric, s.bsde, s.sol.lambda, ens, {});
    const VerificationReport rep = duality_gap(run, p, s.dq, s.sol);
    CHECK(rep.gap_ok);
    CHECK(rep.complementary);
    CHECK(rep.constraints[0].status == ConstraintStatus::Active);
    CHECK(rep.constraints[1].status == ConstraintStatus::Slack);
}

TEST_CASE("path dump has one row per kept node")
{
    const SlqProblem p = test::load("ex2.toml", 10);
    const BrownianEnsemble train(p.grid, 2000, 61);
    const Solved s = solve(p, train);
    SimulationOptions so;
    so.keep_paths = 2;
    const ClosedLoopRun run = simulate_closed_loop(p, s.ric, s.bsde, s.sol.lambda, BrownianEnsemble(p.grid, 100, 62), so);
    std::ostringstream os;
    write_paths_csv(run, os);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    CHECK(line == "path,t,X1,X2,u1,u2,B");
    int rows = 0;
    while (std::getline(is, line)) ++rows;
    CHECK(rows == 2 * 11);
    CHECK(run.X_paths[0].row(0) == p.xi.transpose());
}

}
