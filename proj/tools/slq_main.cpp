#include "slq/errors.hpp"
#include "slq/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv)
{
    CLI::App app{"Constrained stochastic LQ control: solve, verify and sweep"};
    app.require_subcommand(1);

    slq::RunConfig cfg;
    long paths = 0, dump_paths = 0;
    int steps = 0;
    std::uint64_t seed = 0;
    std::string basis;
    bool serial = false;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("problem", cfg.problem_path, "Problem file (TOML)")->required();
        sub->add_option("--paths", paths, "Monte Carlo paths (default 100000)");
        sub->add_option("--steps", steps, "Time steps, overriding the problem file");
        sub->add_option("--seed", seed, "Training seed");
        sub->add_option("--basis", basis, "Regression basis, e.g. \"1,B,B^2,exp(B),exp(-B)\"");
        sub->add_option("--out", cfg.out_dir, "Output directory");
        sub->add_flag("--dump-riccati", cfg.dump_riccati, "Write riccati.csv");
        sub->add_flag("--serial", serial, "Run the serial reference kernels");
        sub->add_flag("--quiet", cfg.quiet, "No text report on stdout");
    };
    CLI::App* solve = app.add_subcommand("solve", "Solve the dual problem and report lambda*");
    add_common(solve);
    solve->add_flag("--dump-coefficients", cfg.dump_coefficients, "Write per-node regression coefficients");
    CLI::App* verify = app.add_subcommand("verify", "Solve, then check strong duality by closed-loop simulation");
    add_common(verify);
    verify->add_option("--dump-paths", dump_paths, "Write the first K trajectories to paths.csv");
    verify->add_option("--se-batches", cfg.se_batches, "Sub-ensembles for the dual-value standard error");
    CLI::App* sweep = app.add_subcommand("sweep", "Dual value over a grid of budgets");
    add_common(sweep);
    sweep->add_option("--sweep", cfg.sweep_spec, "a1=lo:hi:step,a2=lo:hi:step")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (solve->parsed()) cfg.command = slq::Command::Solve;
    if (verify->parsed()) cfg.command = slq::Command::Verify;
    if (sweep->parsed()) cfg.command = slq::Command::Sweep;
    CLI::App* sub = solve->parsed() ? solve : (verify->parsed() ? verify : sweep);
    if (sub->count("--paths")) cfg.paths = paths;
    if (sub->count("--steps")) cfg.steps = steps;
    if (sub->count("--seed")) cfg.seed = seed;
    if (sub->count("--basis")) cfg.basis = basis;
    cfg.dump_paths = dump_paths;
    cfg.exec = serial ? slq::Execution::Serial : slq::Execution::Parallel;

    try {
        switch (cfg.command) {
        case slq::Command::Solve:
            return slq::run_solve(cfg);
        case slq::Command::Verify:
            return slq::run_verify(cfg);
        case slq::Command::Sweep:
            return slq::run_sweep(cfg);
        }
    } catch (const slq::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return slq::exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 4;
    }
    return 0;
}
