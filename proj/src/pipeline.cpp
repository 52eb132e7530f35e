#include "slq/pipeline.hpp"

#include "slq/errors.hpp"
#include "slq/riccati.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace slq {

using json = nlohmann::ordered_json;

std::vector<double> SweepAxis::values() const
{
    std::vector<double> out;
    const auto count = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
    for (long k = 0; k <= count; ++k) out.push_back(lo + static_cast<double>(k) * step);
    return out;
}

std::vector<SweepAxis> parse_sweep(const std::string& spec)
{
    auto bad = [&](const std::string& why) {
        return Error(ErrorCode::InvalidConfig, "cli", "sweep spec '" + spec + "': " + why);
    };
    std::vector<SweepAxis> axes;
    std::stringstream items(spec);
    std::string item;
    while (std::getline(items, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos || item.size() < 2 || item[0] != 'a') throw bad("expected aK=lo:hi:step");
        SweepAxis axis;
        try {
            axis.index = std::stoi(item.substr(1, eq - 1)) - 1;
            std::stringstream range(item.substr(eq + 1));
            std::string part;
            std::vector<double> v;
            while (std::getline(range, part, ':')) v.push_back(std::stod(part));
            if (v.size() != 3) throw bad("range must be lo:hi:step");
            axis.lo = v[0];
            axis.hi = v[1];
            axis.step = v[2];
        } catch (const std::logic_error&) {
            throw bad("cannot read '" + item + "'");
        }
        if (axis.index < 0) throw bad("constraint indices start at 1");
        if (!std::isfinite(axis.lo) || !std::isfinite(axis.hi) || !std::isfinite(axis.step) || axis.step <= 0.0 ||
            axis.hi < axis.lo) {
            throw bad("ranges must be finite and ordered with a positive step");
        }
        for (const SweepAxis& other : axes) {
            if (other.index == axis.index) throw bad("constraint swept twice");
        }
        axes.push_back(axis);
    }
    if (axes.empty()) throw bad("no axes");
    return axes;
}

namespace {

bool deterministic_data(const SlqProblem& p)
{
    if (!p.G.is_deterministic() || !p.K.is_deterministic() || !p.N.is_deterministic()) return false;
    for (const Constraint& c : p.constraints) {
        if (!c.alpha.is_deterministic() || !c.beta.is_deterministic() || !c.gamma.is_deterministic()) return false;
    }
    return true;
}

json to_json(const Vector& v)
{
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

json to_json(const Matrix& m)
{
    json a = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(to_json(Vector(m.row(i).transpose())));
    return a;
}

json to_json(const KktResiduals& r)
{
    return json{{"negativity", to_json(r.negativity)},
                {"feasibility", to_json(r.feasibility)},
                {"complementarity", to_json(r.complementarity)},
                {"max", r.max()}};
}

json active_json(const std::vector<int>& active)
{
    json a = json::array();
    for (int i : active) a.push_back(i + 1);
    return a;
}

std::string active_text(const std::vector<int>& active)
{
    if (active.empty()) return "none";
    std::string s;
    for (std::size_t j = 0; j < active.size(); ++j) s += (j ? ";" : "") + std::to_string(active[j] + 1);
    return s;
}

std::filesystem::path output_path(const RunConfig& cfg, const std::string& name)
{
    std::filesystem::create_directories(cfg.out_dir);
    return std::filesystem::path(cfg.out_dir) / name;
}

void write_json(const std::filesystem::path& path, const json& j)
{
    std::ofstream os(path);
    if (!os) throw Error(ErrorCode::InvalidConfig, "cli", "cannot write " + path.string());
    os << std::setw(2) << j << '\n';
}

void write_coefficients_csv(const BsdeSolution& sol, std::ostream& os)
{
    os << "surrogate,node,t,basis,component,value\n";
    os.precision(17);
    auto dump = [&](const std::string& name, const SurrogatePath& path) {
        for (int k = 0; k < path.nodes(); ++k) {
            const Matrix& c = path.coefficients(k);
            for (Eigen::Index j = 0; j < c.rows(); ++j) {
                for (Eigen::Index d = 0; d < c.cols(); ++d) {
                    os << name << ',' << k << ',' << sol.grid.time(k) << ',' << path.basis()[j].label << ',' << d + 1
                       << ',' << c(j, d) << '\n';
                }
            }
        }
    };
    dump("Q", sol.Q);
    dump("pi", sol.pi);
    dump("psi", sol.psi);
    for (int i = 0; i < sol.l(); ++i) {
        const auto s = static_cast<std::size_t>(i);
        dump("R" + std::to_string(i + 1), sol.R[s]);
        dump("r" + std::to_string(i + 1), sol.r[s]);
        dump("rho" + std::to_string(i + 1), sol.rho[s]);
    }
}

ResolvedSettings resolve(const RunConfig& cfg, const ProblemFile& file)
{
    ResolvedSettings s;
    s.exec = cfg.exec;
    if (cfg.paths) s.paths = *cfg.paths;
    else if (file.solver.paths) s.paths = *file.solver.paths;
    if (cfg.seed) s.seed = *cfg.seed;
    else if (file.solver.seed) s.seed = *file.solver.seed;
    if (cfg.basis) s.basis = Basis::parse(*cfg.basis);
    else if (file.solver.basis) s.basis = Basis::parse(*file.solver.basis);
    if (s.paths < 1) throw Error(ErrorCode::InvalidConfig, "cli", "--paths must be positive");
    return s;
}

SlqProblem load(const RunConfig& cfg, ResolvedSettings& s)
{
    const ProblemFile file = load_problem_file(cfg.problem_path);
    s = resolve(cfg, file);
    SlqProblem p = file.problem;
    if (cfg.steps) {
        if (*cfg.steps < 1) throw Error(ErrorCode::InvalidConfig, "cli", "--steps must be positive");
        p = p.with_steps(*cfg.steps);
    }
    return p;
}

json settings_json(const Artifacts& art)
{
    return json{{"backend", art.backend},
                {"paths", art.backend == "analytic" ? 0 : art.settings.paths},
                {"seed", art.settings.seed},
                {"basis", art.backend == "analytic" ? std::string("1") : art.settings.basis.spec()},
                {"steps", art.problem.grid.N},
                {"start", art.problem.grid.s},
                {"end", art.problem.grid.T}};
}

void print_row(std::ostream& os, const std::string& key, const std::string& value)
{
    os << "  " << std::left << std::setw(22) << key << value << '\n';
}

std::string fmt(double v)
{
    std::ostringstream s;
    s << std::setprecision(10) << v;
    return s.str();
}

std::string fmt(const Vector& v)
{
    std::ostringstream s;
    s << '(';
    for (Eigen::Index i = 0; i < v.size(); ++i) s << (i ? ", " : "") << fmt(v(i));
    s << ')';
    return s.str();
}

}  // namespace

Artifacts prepare(const SlqProblem& p, const ResolvedSettings& s)
{
    validate_problem(p).throw_if_failed();
    Artifacts art;
    art.problem = p;
    art.settings = s;
    art.riccati = solve_riccati(p);
    if (deterministic_data(p)) {
        art.backend = "analytic";
        art.bsde = solve_bsde_analytic(p, art.riccati);
        art.reduced = reduce_constraints_analytic(p);
    } else {
        art.backend = "lsmc";
        const BrownianEnsemble ens(p.grid, s.paths, s.seed, s.exec);
        art.bsde = solve_bsde_lsmc(p, art.riccati, ens, s.basis, s.exec);
        art.reduced = reduce_constraints(p, ens, s.basis, s.exec);
    }
    art.gram = gram_and_invertibility(art.bsde);
    art.dual = assemble_dual(p, art.riccati, art.bsde);
    return art;
}

Vector reduced_budgets(const Artifacts& art, const Vector& a)
{
    return a - art.reduced.R0_tilde * art.problem.xi;
}

double dual_standard_error(const SlqProblem& p, const ResolvedSettings& s, const RiccatiSolution& ric, int batches)
{
    if (deterministic_data(p) || batches < 2) return 0.0;
    const long size = s.paths / batches;
    Vector values(batches);
    for (int b = 0; b < batches; ++b) {
        const BrownianEnsemble ens(p.grid, size, mix_seed(s.seed, 0xba7c400ULL + static_cast<std::uint64_t>(b)), s.exec);
        const BsdeSolution sol = solve_bsde_lsmc(p, ric, ens, s.basis, s.exec);
        values(b) = solve_dual(assemble_dual(p, ric, sol)).value;
    }
    const double mean = values.mean();
    const double var = (values.array() - mean).square().sum() / (batches - 1.0);
    return std::sqrt(var / batches);
}

std::uint64_t verification_seed(std::uint64_t training_seed)
{
    std::uint64_t seed = mix_seed(training_seed, 0x7e51f1ca7e5eedULL);
    if (seed == training_seed) seed ^= 1;
    return seed;
}

SolveOutcome solve_problem(const SlqProblem& p, const ResolvedSettings& s)
{
    SolveOutcome out;
    out.artifacts = prepare(p, s);
    out.witness = slater_check(out.artifacts.reduced);
    out.solution = solve_dual(out.artifacts.dual);
    if (out.artifacts.gram.independent && p.l() > 0) {
        const DualSolution proj = project_solve(out.artifacts.dual);
        out.projection_gap = (proj.lambda - out.solution.lambda).cwiseAbs().maxCoeff();
    }
    return out;
}

VerifyOutcome verify_problem(const SlqProblem& p, const ResolvedSettings& s, int se_batches, long keep_paths)
{
    if (s.paths < kMinVerifyPaths) {
        throw Error(ErrorCode::InvalidConfig, "cli",
                    "verify needs at least " + std::to_string(kMinVerifyPaths) + " paths (got " + std::to_string(s.paths) +
                        ")");
    }
    VerifyOutcome out;
    out.solve = solve_problem(p, s);
    const Artifacts& art = out.solve.artifacts;
    const BrownianEnsemble ens(p.grid, s.paths, verification_seed(s.seed), s.exec);
    SimulationOptions opts;
    opts.keep_paths = keep_paths;
    opts.exec = s.exec;
    opts.training_seed = s.seed;
    out.run = simulate_closed_loop(p, art.riccati, art.bsde, out.solve.solution.lambda, ens, opts);
    const double dual_se = dual_standard_error(p, s, art.riccati, se_batches);
    out.report = duality_gap(out.run, p, art.dual, out.solve.solution, dual_se);
    return out;
}

SweepOutcome sweep_problem(const Artifacts& art, const std::vector<SweepAxis>& axes, Execution exec)
{
    const SlqProblem& p = art.problem;
    SweepOutcome out;
    out.axes = axes;
    std::vector<std::vector<double>> values;
    std::size_t total = 1;
    for (const SweepAxis& axis : axes) {
        if (axis.index >= p.l()) {
            throw Error(ErrorCode::InvalidConfig, "cli",
                        "sweep axis a" + std::to_string(axis.index + 1) + " has no matching constraint");
        }
        values.push_back(axis.values());
        total *= values.back().size();
    }
    const Vector base = p.budgets();
    out.cells.resize(total);
    for (std::size_t c = 0; c < total; ++c) {
        Vector a = base;
        std::size_t rest = c;
        for (std::size_t j = axes.size(); j-- > 0;) {
            a(axes[j].index) = values[j][rest % values[j].size()];
            rest /= values[j].size();
        }
        out.cells[c].a = a;
    }

    const auto count = static_cast<long>(total);
#pragma omp parallel for schedule(dynamic) if (exec == Execution::Parallel)
    for (long c = 0; c < count; ++c) {
        SweepCell& cell = out.cells[static_cast<std::size_t>(c)];
        try {
            slater_check(art.reduced.gram, reduced_budgets(art, cell.a), art.reduced.l_prime);
            cell.solution = solve_dual(with_budgets(art.dual, cell.a));
        } catch (const Error& e) {
            cell.feasible = false;
            cell.error = e.what();
        }
    }

    // Along every axis: the value never increases when a budget grows, and stays exactly
    // flat while the corresponding multiplier is zero on both cells.
    std::size_t stride = 1;
    int violations = 0, flat_breaks = 0;
    for (std::size_t j = axes.size(); j-- > 0;) {
        const std::size_t len = values[j].size();
        const int idx = axes[j].index;
        for (std::size_t c = 0; c < total; ++c) {
            if ((c / stride) % len == len - 1) continue;
            const SweepCell& lo = out.cells[c];
            const SweepCell& hi = out.cells[c + stride];
            if (!lo.feasible || !hi.feasible) continue;
            const double tol = 1e-10 * residual_scale(with_budgets(art.dual, lo.a)) * (1.0 + std::abs(lo.solution.value));
            if (hi.solution.value > lo.solution.value + tol) ++violations;
            if (idx < art.dual.l_prime && lo.solution.lambda(idx) == 0.0 && hi.solution.lambda(idx) == 0.0 &&
                hi.solution.value != lo.solution.value) {
                ++flat_breaks;
            }
        }
        stride *= len;
    }
    out.monotone = violations == 0;
    out.flat = flat_breaks == 0;
    std::ostringstream s;
    s << "monotonicity: " << (out.monotone ? "non-increasing" : "VIOLATED") << " in every swept budget ("
      << violations << " violations); flat where multiplier is zero: " << (out.flat ? "yes" : "no") << " ("
      << flat_breaks << " breaks); cells: " << total;
    out.summary = s.str();
    return out;
}

int run_solve(const RunConfig& cfg)
{
    ResolvedSettings s;
    const SlqProblem p = load(cfg, s);
    const SolveOutcome out = solve_problem(p, s);
    const Artifacts& art = out.artifacts;
    const DualSolution& sol = out.solution;

    json j;
    j["lambda"] = to_json(sol.lambda);
    j["active"] = active_json(sol.active);
    j["value"] = sol.value;
    j["residuals"] = to_json(sol.residuals);
    j["unique"] = sol.unique;
    j["method"] = sol.method;
    j["settings"] = settings_json(art);
    j["l_prime"] = art.dual.l_prime;
    j["budgets"] = to_json(art.dual.a);
    j["dual"] = json{{"const_term", art.dual.const_term},
                     {"lin", to_json(art.dual.lin)},
                     {"intercept", to_json(art.dual.intercept)},
                     {"gram", to_json(art.dual.gram)}};
    j["gram_eigmin"] = art.gram.eigmin;
    j["independent"] = art.gram.independent;
    if (out.projection_gap) j["projection_agreement"] = *out.projection_gap;
    j["slater"] = json{{"margin", out.witness.margin},
                       {"coefficients", to_json(out.witness.coefficients)},
                       {"reduced_budgets", to_json(art.reduced.a_tilde)}};
    j["riccati"] = json{{"P_start", to_json(art.riccati.P.front())}, {"eps_S", art.riccati.eps_S}};
    j["feedback"] = "u = -S^-1 (L X + psi + sum_i lambda_i rho_i)";
    write_json(output_path(cfg, "solution.json"), j);

    if (cfg.dump_riccati) {
        std::ofstream os(output_path(cfg, "riccati.csv"));
        write_riccati_csv(art.riccati, os);
    }
    if (cfg.dump_coefficients) {
        std::ofstream os(output_path(cfg, "coefficients.csv"));
        write_coefficients_csv(art.bsde, os);
    }
    if (!cfg.quiet) {
        std::cout << "solve " << cfg.problem_path << '\n';
        print_row(std::cout, "backend", art.backend);
        print_row(std::cout, "lambda*", fmt(sol.lambda));
        print_row(std::cout, "active set", active_text(sol.active));
        print_row(std::cout, "dual value", fmt(sol.value));
        print_row(std::cout, "kkt residual", fmt(sol.residuals.max()));
        print_row(std::cout, "gram eigmin", fmt(art.gram.eigmin));
        print_row(std::cout, "unique", sol.unique ? "yes" : "no");
        print_row(std::cout, "slater margin", fmt(out.witness.margin));
    }
    return 0;
}

int run_verify(const RunConfig& cfg)
{
    ResolvedSettings s;
    const SlqProblem p = load(cfg, s);
    const VerifyOutcome out = verify_problem(p, s, cfg.se_batches, cfg.dump_paths);
    const VerificationReport& r = out.report;
    const DualSolution& sol = out.solve.solution;

    json cons = json::array();
    for (std::size_t i = 0; i < r.constraints.size(); ++i) {
        const ConstraintEstimate& c = r.constraints[i];
        cons.push_back(json{{"name", p.constraints[i].name},
                            {"kind", c.kind == ConstraintKind::Equality ? "equality" : "inequality"},
                            {"estimate", c.value.mean},
                            {"se", c.value.se},
                            {"a", c.a},
                            {"status", to_string(c.status)}});
    }
    json j;
    j["lambda"] = to_json(sol.lambda);
    j["active"] = active_json(sol.active);
    j["value"] = sol.value;
    j["residuals"] = to_json(sol.residuals);
    j["unique"] = sol.unique;
    j["settings"] = settings_json(out.solve.artifacts);
    j["verification_seed"] = out.run.seed;
    j["J"] = json{{"mean", r.J.mean}, {"se", r.J.se}};
    j["dual_se"] = r.dual_se;
    j["gap"] = json{{"value", r.gap}, {"se", r.gap_se}, {"allowance", r.allowance}, {"pass", r.gap_ok}};
    j["constraints"] = cons;
    j["feasible"] = r.feasible;
    j["complementary"] = r.complementary;
    j["pass"] = r.pass();
    write_json(output_path(cfg, "verification.json"), j);

    if (cfg.dump_paths > 0) {
        std::ofstream os(output_path(cfg, "paths.csv"));
        write_paths_csv(out.run, os);
    }
    if (cfg.dump_riccati) {
        std::ofstream os(output_path(cfg, "riccati.csv"));
        write_riccati_csv(out.solve.artifacts.riccati, os);
    }
    if (!cfg.quiet) {
        std::cout << "verify " << cfg.problem_path << '\n';
        print_row(std::cout, "lambda*", fmt(sol.lambda));
        print_row(std::cout, "dual value", fmt(sol.value) + " +- " + fmt(r.dual_se));
        print_row(std::cout, "J_hat", fmt(r.J.mean) + " +- " + fmt(r.J.se));
        print_row(std::cout, "gap", fmt(r.gap) + " (bound " + fmt(3.0 * r.gap_se + r.allowance) + ")");
        for (std::size_t i = 0; i < r.constraints.size(); ++i) {
            const ConstraintEstimate& c = r.constraints[i];
            print_row(std::cout, "constraint " + std::to_string(i + 1),
                      fmt(c.value.mean) + " +- " + fmt(c.value.se) + " vs a=" + fmt(c.a) + " [" + to_string(c.status) + "]");
        }
        print_row(std::cout, "result", r.pass() ? "PASS" : "FAIL");
    }
    return r.pass() ? 0 : 4;
}

int run_sweep(const RunConfig& cfg)
{
    if (cfg.sweep_spec.empty()) throw Error(ErrorCode::InvalidConfig, "cli", "sweep needs --sweep");
    const auto axes = parse_sweep(cfg.sweep_spec);
    ResolvedSettings s;
    const SlqProblem p = load(cfg, s);
    const Artifacts art = prepare(p, s);
    const SweepOutcome out = sweep_problem(art, axes, cfg.exec);

    std::ofstream os(output_path(cfg, "sweep.csv"));
    os.precision(17);
    for (int i = 0; i < p.l(); ++i) os << 'a' << i + 1 << ',';
    os << "dual_value";
    for (int i = 0; i < p.l(); ++i) os << ",lambda" << i + 1;
    os << ",active_set\n";
    for (const SweepCell& cell : out.cells) {
        for (int i = 0; i < p.l(); ++i) os << cell.a(i) << ',';
        if (!cell.feasible) {
            os << "nan";
            for (int i = 0; i < p.l(); ++i) os << ",nan";
            os << ",infeasible\n";
            continue;
        }
        os << cell.solution.value;
        for (int i = 0; i < p.l(); ++i) os << ',' << cell.solution.lambda(i);
        os << ',' << active_text(cell.solution.active) << '\n';
    }
    std::ofstream(output_path(cfg, "sweep_summary.txt")) << out.summary << '\n';
    if (!cfg.quiet) std::cout << out.summary << '\n';
    return 0;
}

}  // namespace slq
