// Acceptance gate: one [PASS]/[FAIL] line per criterion.
#include "slq/config.hpp"
#include "slq/dual.hpp"
#include "slq/montecarlo.hpp"
#include "slq/pipeline.hpp"
#include "slq/riccati.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace slq;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

SlqProblem load(const std::string& name, int steps = 0)
{
    SlqProblem p = load_problem_file(std::string(SLQ_PROBLEM_DIR) + "/" + name).problem;
    return steps > 0 ? p.with_steps(steps) : p;
}

std::uint64_t file_seed(const std::string& name)
{
    return load_problem_file(std::string(SLQ_PROBLEM_DIR) + "/" + name).solver.seed.value_or(kDefaultSeed);
}

ResolvedSettings settings(long paths, std::uint64_t seed)
{
    ResolvedSettings s;
    s.paths = paths;
    s.seed = seed;
    return s;
}

class Report {
public:
    void line(int id, bool ok, const std::string& title, const std::string& detail)
    {
        std::cout << (ok ? "[PASS] " : "[FAIL] ") << id << ' ' << title << ": " << detail << std::endl;
        failed_ += ok ? 0 : 1;
    }
    int failed() const { return failed_; }

private:
    int failed_ = 0;
};

std::string num(double v)
{
    std::ostringstream s;
    s.precision(6);
    s << v;
    return s.str();
}

// ---- 1 -------------------------------------------------------------------

void riccati_closed_forms(Report& rep)
{
    bool ok = true;
    std::ostringstream d;
    for (int ex = 1; ex <= 2; ++ex) {
        const SlqProblem p = load(ex == 1 ? "ex1.toml" : "ex2.toml", 2000);
        const auto t0 = Clock::now();
        const RiccatiSolution sol = solve_riccati(p);
        const double secs = seconds_since(t0);
        double err = 0.0;
        for (int k = 0; k < sol.nodes(); ++k) {
            const double t = p.grid.time(k);
            const double f = ex == 1 ? std::exp(1.0 - t) - 1.0 : 1.0 / (2.0 - t);
            err = std::max(err, (sol.P[static_cast<std::size_t>(k)] - f * Matrix::Identity(2, 2)).cwiseAbs().maxCoeff());
        }
        ok = ok && err <= 1e-8 && secs < 1.0;
        d << "ex" << ex << " max err " << num(err) << " in " << num(secs) << " s; ";
    }
    rep.line(1, ok, "Riccati closed forms", d.str());
}

// ---- 2, 3 ----------------------------------------------------------------

struct Trained {
    SlqProblem p;
    RiccatiSolution ric;
    BrownianEnsemble ens;
    BsdeSolution bsde;
    double seconds = 0.0;
};

Trained train(const std::string& name)
{
    Trained t;
    t.p = load(name);
    t.ric = solve_riccati(t.p);
    const auto t0 = Clock::now();
    t.ens = BrownianEnsemble(t.p.grid, 100000, file_seed(name));
    t.bsde = solve_bsde_lsmc(t.p, t.ric, t.ens, Basis::standard());
    t.seconds = seconds_since(t0);
    return t;
}

// Largest |sample mean − truth| / SE over every 20th node, for a per-path statistic of ρ̂_i.
template <class Stat, class Truth>
double worst_z(const Trained& t, int i, Stat stat, Truth truth, int& nodes)
{
    double worst = 0.0;
    nodes = 0;
    for (int k = 20; k <= t.p.grid.N; k += 20) {
        const Matrix v = t.bsde.rho[static_cast<std::size_t>(i)].evaluate_node(k, t.ens.node(k), Execution::Parallel);
        const Matrix s = stat(v);
        const double time = t.p.grid.time(k);
        for (Eigen::Index c = 0; c < s.cols(); ++c) {
            const Estimate e = sample_estimate(s.col(c));
            const double gap = std::abs(e.mean - truth(time, c));
            worst = std::max(worst, gap == 0.0 ? 0.0 : gap / e.se);
        }
        ++nodes;
    }
    return worst;
}

void bsde_moments(Report& rep, const Trained& ex1, const Trained& ex2)
{
    int nodes = 0;
    double z1 = 0.0, z2 = 0.0;
    for (int i = 0; i < 2; ++i) {
        // E ρ_i(t) = e^{−t/2} e_i
        z1 = std::max(z1, worst_z(
                              ex1, i, [](const Matrix& v) { return v; },
                              [i](double t, Eigen::Index c) { return c == i ? std::exp(-t / 2.0) : 0.0; }, nodes));
        // E ‖ρ_i(t)‖² = 4/(2−t)²
        z2 = std::max(z2, worst_z(
                              ex2, i, [](const Matrix& v) { return Matrix(v.rowwise().squaredNorm()); },
                              [](double t, Eigen::Index) { return 4.0 / ((2.0 - t) * (2.0 - t)); }, nodes));
    }
    const bool ok = z1 <= 3.0 && z2 <= 3.0 && ex1.seconds < 30.0 && ex2.seconds < 30.0;
    rep.line(2, ok, "BSDE moments",
             "worst |mean - truth|/SE over " + std::to_string(nodes) + " nodes: ex1 " + num(z1) + ", ex2 " + num(z2) +
                 "; LSMC " + num(ex1.seconds) + " s / " + num(ex2.seconds) + " s");
}

void gram_matrices(Report& rep, const Trained& ex1, const Trained& ex2)
{
    const double g1 = 1.0 - std::exp(-1.0);
    const double e1 = (ex1.bsde.gram - g1 * Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() / g1;
    const double e2 = (ex2.bsde.gram - 2.0 * Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() / 2.0;
    rep.line(3, e1 <= 0.02 && e2 <= 0.02, "Gram matrices",
             "ex1 diag (" + num(ex1.bsde.gram(0, 0)) + ", " + num(ex1.bsde.gram(1, 1)) + ") rel err " + num(e1) +
                 "; ex2 diag (" + num(ex2.bsde.gram(0, 0)) + ", " + num(ex2.bsde.gram(1, 1)) + ") rel err " + num(e2));
}

// ---- 4 -------------------------------------------------------------------

void dual_kkt(Report& rep, const Trained& ex2)
{
    // closed forms: Γ = 2 Id, ⟨ξ, E R_i(0)⟩ = 1, E∫⟨S⁻¹ψ, ρ_i⟩ = 2, constant 1
    DualQuadratic exact;
    exact.gram = 2.0 * Matrix::Identity(2, 2);
    exact.intercept = Vector::Constant(2, -1.0);
    exact.a = (Vector(2) << -2.0, 0.0).finished();
    exact.lin = 2.0 * (exact.intercept - exact.a);
    exact.const_term = 1.0;
    exact.l_prime = 2;
    const DualSolution se = solve_dual(exact);
    const double exact_err = (se.lambda - (Vector(2) << 0.5, 0.0).finished()).cwiseAbs().maxCoeff();

    const DualQuadratic dq = assemble_dual(ex2.p, ex2.ric, ex2.bsde);
    const DualSolution mc = solve_dual(dq);
    // SE of λ from ten independent training sub-ensembles of the same total size
    const int batches = 10;
    Matrix lam(batches, 2);
    for (int b = 0; b < batches; ++b) {
        const BrownianEnsemble ens(ex2.p.grid, 10000, mix_seed(ex2.ens.seed(), 0xba7c400ULL + static_cast<std::uint64_t>(b)));
        const BsdeSolution sol = solve_bsde_lsmc(ex2.p, ex2.ric, ens, Basis::standard());
        lam.row(b) = solve_dual(assemble_dual(ex2.p, ex2.ric, sol)).lambda.transpose();
    }
    double worst = 0.0;
    Vector se_l(2);
    for (int i = 0; i < 2; ++i) {
        const double mean = lam.col(i).mean();
        se_l(i) = std::sqrt((lam.col(i).array() - mean).square().sum() / (batches - 1.0) / batches);
        const double truth = i == 0 ? 0.5 : 0.0;
        const double gap = std::abs(mc.lambda(i) - truth);
        worst = std::max(worst, gap == 0.0 ? 0.0 : gap / se_l(i));
    }
    const bool ok = exact_err <= 1e-6 && se.residuals.max() <= 1e-8 && worst <= 3.0 && mc.residuals.max() <= 1e-8;
    rep.line(4, ok, "Dual/KKT",
             "exact-Γ λ error " + num(exact_err) + ", KKT " + num(se.residuals.max()) + "; MC λ = (" +
                 num(mc.lambda(0)) + ", " + num(mc.lambda(1)) + "), SE (" + num(se_l(0)) + ", " + num(se_l(1)) +
                 "), worst " + num(worst) + " SE, KKT " + num(mc.residuals.max()));
}

// ---- 5 -------------------------------------------------------------------

bool verify_case(const SlqProblem& p, std::uint64_t seed, const std::string& label, std::ostringstream& d)
{
    const auto t0 = Clock::now();
    const VerifyOutcome v = verify_problem(p, settings(100000, seed), 10);
    const double secs = seconds_since(t0);
    const VerificationReport& r = v.report;
    const bool ok = r.gap_ok && secs < 60.0;
    d << label << " gap " << num(r.gap) << " (3SE+2dt " << num(3.0 * r.gap_se + r.allowance) << ", " << num(secs)
      << " s)" << (ok ? "" : " FAILED") << "; ";
    return ok;
}

void strong_duality(Report& rep)
{
    std::ostringstream d;
    bool ok = verify_case(load("ex1.toml"), file_seed("ex1.toml"), "ex1", d);
    const SlqProblem ex2 = load("ex2.toml");
    ok = verify_case(ex2, file_seed("ex2.toml"), "ex2", d) && ok;

    // random budgets on the second example, kept only when a Slater point exists
    std::mt19937_64 rng(20240503);
    std::uniform_real_distribution<double> budget(-3.0, 1.0);
    const Artifacts art = prepare(ex2, settings(20000, 77));
    int drawn = 0;
    while (drawn < 5) {
        const Vector a = (Vector(2) << budget(rng), budget(rng)).finished();
        try {
            slater_check(art.reduced.gram, reduced_budgets(art, a), art.reduced.l_prime);
        } catch (const Error&) {
            continue;
        }
        SlqProblem p = ex2;
        p.set_budgets(a);
        ++drawn;
        ok = verify_case(p, 1000 + static_cast<std::uint64_t>(drawn), "a=(" + num(a(0)) + "," + num(a(1)) + ")", d) && ok;
    }
    rep.line(5, ok, "Strong duality", d.str());
}

// ---- 6 -------------------------------------------------------------------

const char* kDeterministic = R"(
[grid]
start = 0.0
end = 1.0
steps = 100
[dynamics]
xi = [1.0, 1.0]
controls = 2
A = -0.5
B = 1.0
C = 1.0
D = 0.0
[cost]
E = 0.0
F = 0.0
I = 1.0
M = 1.0
N = [0.7, 0.7]
[[constraint]]
a = -1.0
gamma = [0.8, 0.0]
[[constraint]]
a = 0.0
gamma = [0.0, 0.8]
)";

void property_suite(Report& rep, const Trained& ex1, const Trained& ex2)
{
    std::ostringstream d;
    bool ok = true;

    // solver cross-agreement
    double cross = 0.0;
    for (const Trained* t : {&ex1, &ex2}) {
        const DualQuadratic dq = assemble_dual(t->p, t->ric, t->bsde);
        cross = std::max(cross, (solve_dual(dq).lambda - project_solve(dq).lambda).cwiseAbs().maxCoeff());
    }
    ok = ok && cross <= 1e-8;
    d << "solve/project " << num(cross) << "; ";

    // constraint scaling: same training and simulation seeds
    {
        const SlqProblem p = load("ex2.toml", 100);
        SlqProblem q = p;
        q.constraints[0] = q.constraints[0].scaled(4.0);
        q.constraints[1] = q.constraints[1].scaled(0.5);
        const RiccatiSolution ric = solve_riccati(p);
        const BrownianEnsemble train_ens(p.grid, 20000, 601);
        const BsdeSolution bp = solve_bsde_lsmc(p, ric, train_ens, Basis::standard());
        const BsdeSolution bq = solve_bsde_lsmc(q, ric, train_ens, Basis::standard());
        const Vector lp = solve_dual(assemble_dual(p, ric, bp)).lambda;
        const Vector lq = solve_dual(assemble_dual(q, ric, bq)).lambda;
        const BrownianEnsemble ens(p.grid, 5000, 602);
        SimulationOptions so;
        so.keep_paths = 50;
        const ClosedLoopRun rp = simulate_closed_loop(p, ric, bp, lp, ens, so);
        const ClosedLoopRun rq = simulate_closed_loop(q, ric, bq, lq, ens, so);
        double worst = 0.0;
        for (std::size_t j = 0; j < rp.u_paths.size(); ++j) {
            worst = std::max(worst, (rp.u_paths[j] - rq.u_paths[j]).cwiseAbs().maxCoeff());
        }
        ok = ok && worst <= 1e-8;
        d << "scaling " << num(worst) << "; ";
    }

    // backend equivalence on deterministic data
    {
        const SlqProblem p = parse_problem(kDeterministic).problem;
        const Artifacts art = prepare(p, settings(1000, 1));
        const double exact = solve_dual(art.dual).value;
        const int batches = 10;
        Vector values(batches);
        for (int b = 0; b < batches; ++b) {
            const BrownianEnsemble ens(p.grid, 10000, 700 + static_cast<std::uint64_t>(b));
            values(b) = solve_dual(assemble_dual(p, art.riccati, solve_bsde_lsmc(p, art.riccati, ens, Basis::standard()))).value;
        }
        const double mean = values.mean();
        const double se = std::sqrt((values.array() - mean).square().sum() / (batches - 1.0) / batches);
        const double diff = std::abs(mean - exact);
        const bool pass = diff <= 3.0 * se || diff <= 1e-12 * std::abs(exact);
        ok = ok && pass;
        d << "backends |diff| " << num(diff) << " (SE " << num(se) << "); ";
    }

    // concavity and weak duality on the Monte Carlo dual of the second example
    {
        const DualQuadratic dq = assemble_dual(ex2.p, ex2.ric, ex2.bsde);
        const DualSolution sol = solve_dual(dq);
        const BrownianEnsemble ens(ex2.p.grid, 100000, verification_seed(ex2.ens.seed()));
        SimulationOptions so;
        so.training_seed = ex2.ens.seed();
        const ClosedLoopRun run = simulate_closed_loop(ex2.p, ex2.ric, ex2.bsde, sol.lambda, ens, so);
        const VerificationReport vr = duality_gap(run, ex2.p, dq, sol);
        std::mt19937_64 rng(603);
        std::exponential_distribution<double> expo(1.0);
        int concave_fail = 0, weak_fail = 0;
        for (int probe = 0; probe < 1000; ++probe) {
            const Vector x = (Vector(2) << expo(rng), expo(rng)).finished();
            const Vector y = (Vector(2) << expo(rng), expo(rng)).finished();
            const double mid = dual_value(dq, 0.5 * (x + y));
            if (mid < 0.5 * (dual_value(dq, x) + dual_value(dq, y)) - 1e-12) ++concave_fail;
            if (dual_value(dq, x) > vr.J.mean + 3.0 * vr.J.se + vr.allowance) ++weak_fail;
        }
        ok = ok && concave_fail == 0 && weak_fail == 0 && vr.feasible;
        d << "concavity failures " << concave_fail << ", weak-duality failures " << weak_fail;
    }
    rep.line(6, ok, "Property suite", d.str());
}

// ---- 7 -------------------------------------------------------------------

void sweep_monotonicity(Report& rep)
{
    const SlqProblem p = load("ex2.toml");
    const Artifacts art = prepare(p, settings(100000, file_seed("ex2.toml")));
    const SweepOutcome out = sweep_problem(art, parse_sweep("a1=-3:1:0.25,a2=-3:1:0.25"), Execution::Parallel);
    int infeasible = 0;
    for (const SweepCell& c : out.cells) infeasible += c.feasible ? 0 : 1;
    rep.line(7, out.monotone && out.flat && infeasible == 0, "Sweep monotonicity",
             out.summary + "; infeasible cells " + std::to_string(infeasible));
}

}  // namespace

template <class Fn>
void guarded(Report& rep, int id, const std::string& title, Fn&& fn)
{
    try {
        fn();
    } catch (const std::exception& e) {
        rep.line(id, false, title, std::string("error: ") + e.what());
    }
}

int main()
{
    Report rep;
    guarded(rep, 1, "Riccati closed forms", [&] { riccati_closed_forms(rep); });
    Trained ex1, ex2;
    bool trained = true;
    guarded(rep, 2, "BSDE moments", [&] {
        trained = false;
        ex1 = train("ex1.toml");
        ex2 = train("ex2.toml");
        trained = true;
        bsde_moments(rep, ex1, ex2);
    });
    if (trained) {
        guarded(rep, 3, "Gram matrices", [&] { gram_matrices(rep, ex1, ex2); });
        guarded(rep, 4, "Dual/KKT", [&] { dual_kkt(rep, ex2); });
    } else {
        rep.line(3, false, "Gram matrices", "no LSMC solution");
        rep.line(4, false, "Dual/KKT", "no LSMC solution");
    }
    guarded(rep, 5, "Strong duality", [&] { strong_duality(rep); });
    if (trained) guarded(rep, 6, "Property suite", [&] { property_suite(rep, ex1, ex2); });
    else rep.line(6, false, "Property suite", "no LSMC solution");
    guarded(rep, 7, "Sweep monotonicity", [&] { sweep_monotonicity(rep); });
    return rep.failed() == 0 ? 0 : 1;
}
