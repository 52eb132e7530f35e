#include "slq/brownian.hpp"
#include "slq/bsde.hpp"
#include "slq/config.hpp"
#include "slq/dual.hpp"
#include "slq/montecarlo.hpp"
#include "slq/regression.hpp"
#include "slq/riccati.hpp"

#include <benchmark/benchmark.h>

#include <string>

using namespace slq;

namespace {

// Arg 0 selects the policy: 0 serial reference, 1 OpenMP.
Execution policy(const benchmark::State& state)
{
    return state.range(0) == 0 ? Execution::Serial : Execution::Parallel;
}

const SlqProblem& ex2()
{
    static const SlqProblem p = load_problem_file(std::string(SLQ_PROBLEM_DIR) + "/ex2.toml").problem.with_steps(50);
    return p;
}

void set_label(benchmark::State& state)
{
    state.SetLabel(state.range(0) == 0 ? "serial" : "openmp");
}

void brownian(benchmark::State& state)
{
    const TimeGrid grid = TimeGrid::make(0.0, 1.0, 200);
    for (auto _ : state) {
        BrownianEnsemble ens(grid, state.range(1), 1, policy(state));
        benchmark::DoNotOptimize(ens.values().data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(1) * 200);
    set_label(state);
}
BENCHMARK(brownian)->ArgsProduct({{0, 1}, {20000, 100000}})->Unit(benchmark::kMillisecond);

void regression_fit(benchmark::State& state)
{
    const TimeGrid grid = TimeGrid::make(0.0, 1.0, 1);
    const BrownianEnsemble ens(grid, state.range(1), 2);
    const Vector b = ens.node(1);
    const Matrix targets = b.array().exp().matrix().replicate(1, 8);
    for (auto _ : state) {
        const RegressionPlan plan(Basis::standard(), b, policy(state));
        benchmark::DoNotOptimize(plan.fit(targets).data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(1));
    set_label(state);
}
BENCHMARK(regression_fit)->ArgsProduct({{0, 1}, {20000, 100000}})->Unit(benchmark::kMillisecond);

void lsmc(benchmark::State& state)
{
    const SlqProblem& p = ex2();
    const RiccatiSolution ric = solve_riccati(p);
    const BrownianEnsemble ens(p.grid, state.range(1), 3);
    for (auto _ : state) {
        const BsdeSolution sol = solve_bsde_lsmc(p, ric, ens, Basis::standard(), policy(state));
        benchmark::DoNotOptimize(sol.gram.data());
    }
    set_label(state);
}
BENCHMARK(lsmc)->ArgsProduct({{0, 1}, {20000}})->Unit(benchmark::kMillisecond);

void closed_loop(benchmark::State& state)
{
    const SlqProblem& p = ex2();
    const RiccatiSolution ric = solve_riccati(p);
    const BsdeSolution bsde = solve_bsde_lsmc(p, ric, BrownianEnsemble(p.grid, 20000, 4), Basis::standard());
    const Vector lambda = solve_dual(assemble_dual(p, ric, bsde)).lambda;
    const BrownianEnsemble ens(p.grid, state.range(1), 5);
    SimulationOptions opts;
    opts.exec = policy(state);
    for (auto _ : state) {
        const ClosedLoopRun run = simulate_closed_loop(p, ric, bsde, lambda, ens, opts);
        benchmark::DoNotOptimize(run.J_samples.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(1));
    set_label(state);
}
BENCHMARK(closed_loop)->ArgsProduct({{0, 1}, {20000, 100000}})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
