#include "support.hpp"

#include "slq/errors.hpp"
#include "slq/pipeline.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sys/wait.h>

using namespace slq;

namespace {

int run_cli(const std::string& args)
{
    const std::string cmd = std::string(SLQ_CLI) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::filesystem::path scratch(const std::string& name)
{
    const auto dir = std::filesystem::temp_directory_path() / "slq_tests" / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

ResolvedSettings small_settings(long paths, std::uint64_t seed)
{
    ResolvedSettings s;
    s.paths = paths;
    s.seed = seed;
    return s;
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("deterministic data uses the analytic backend and LSMC agrees within 3 SE")
{
    const SlqProblem p = parse_problem(test::kDeterministicProblem).problem;
    const Artifacts art = prepare(p, small_settings(1000, 1));
    CHECK(art.backend == "analytic");
    const double exact = solve_dual(art.dual).value;

    const int batches = 10;
    Vector values(batches);
    for (int b = 0; b < batches; ++b) {
        const BrownianEnsemble ens(p.grid, 2000, 500 + static_cast<std::uint64_t>(b));
        const BsdeSolution sol = solve_bsde_lsmc(p, art.riccati, ens, Basis::standard());
        values(b) = solve_dual(assemble_dual(p, art.riccati, sol)).value;
    }
    const double mean = values.mean();
    const double se = std::sqrt((values.array() - mean).square().sum() / (batches - 1.0) / batches);
    CHECK(std::abs(mean - exact) <= 3.0 * se + 1e-12 * std::abs(exact));
}

TEST_CASE("sweep on the second example is monotone and flat where slack")
{
    const SlqProblem p = test::load("ex2.toml", 50);
    const Artifacts art = prepare(p, small_settings(10000, 3));
    const SweepOutcome out = sweep_problem(art, parse_sweep("a1=-3:1:0.5,a2=-3:1:0.5"), Execution::Parallel);
    CHECK(out.cells.size() == 81);
    CHECK(out.monotone);
    CHECK(out.flat);
    for (const SweepCell& c : out.cells) CHECK(c.feasible);
    // with a1 ≥ intercept_1 the first multiplier vanishes
    const SweepCell& last = out.cells.back();
    CHECK(last.solution.lambda(0) == 0.0);
    CHECK(last.solution.lambda(1) == 0.0);
}

TEST_CASE("sweep specs are validated")
{
    CHECK(parse_sweep("a2=0:1:0.25")[0].index == 1);
    CHECK(parse_sweep("a1=0:1:0.25")[0].values().size() == 5);
    CHECK_THROWS_AS(parse_sweep("a1=0:1"), Error);
    CHECK_THROWS_AS(parse_sweep("a1=1:0:0.5"), Error);
    CHECK_THROWS_AS(parse_sweep("a0=0:1:1"), Error);
    CHECK_THROWS_AS(parse_sweep("a1=0:1:1,a1=0:1:1"), Error);
    CHECK_THROWS_AS(parse_sweep("b1=0:1:1"), Error);
}

TEST_CASE("seeds fully determine a solve")
{
    const SlqProblem p = test::load("ex2.toml", 20);
    const SolveOutcome a = solve_problem(p, small_settings(4000, 9));
    const SolveOutcome b = solve_problem(p, small_settings(4000, 9));
    const SolveOutcome c = solve_problem(p, small_settings(4000, 10));
    CHECK(a.solution.lambda == b.solution.lambda);
    CHECK(a.solution.value == b.solution.value);
    CHECK(a.solution.value != c.solution.value);
}

TEST_CASE("cli: solve writes a report")
{
    const auto dir = scratch("solve");
    const auto problem = dir / "det.toml";
    std::ofstream(problem) << test::kDeterministicProblem;
    REQUIRE(run_cli("solve " + problem.string() + " --out " + dir.string() + " --dump-riccati") == 0);
    std::ifstream is(dir / "solution.json");
    const nlohmann::json j = nlohmann::json::parse(is);
    CHECK(j["lambda"].size() == 2);
    CHECK(j["settings"]["backend"] == "analytic");
    CHECK(j["residuals"]["max"].get<double>() <= 1e-8);
    CHECK(std::filesystem::exists(dir / "riccati.csv"));
}

TEST_CASE("cli: sweep writes the grid")
{
    const auto dir = scratch("sweep");
    const auto problem = dir / "det.toml";
    std::ofstream(problem) << test::kDeterministicProblem;
    REQUIRE(run_cli("sweep " + problem.string() + " --sweep a1=-2:0:1,a2=-1:1:1 --out " + dir.string()) == 0);
    std::ifstream is(dir / "sweep.csv");
    std::string line;
    std::getline(is, line);
    CHECK(line.rfind("a1,a2,dual_value", 0) == 0);
    int rows = 0;
    while (std::getline(is, line)) ++rows;
    CHECK(rows == 9);
    CHECK(std::filesystem::exists(dir / "sweep_summary.txt"));
}

TEST_CASE("cli: serial reports are byte-identical")
{
    const auto a = scratch("det_a"), b = scratch("det_b");
    const std::string args = "solve " + test::problem_path("ex2.toml") + " --paths 3000 --steps 20 --serial --quiet --out ";
    REQUIRE(run_cli(args + a.string()) == 0);
    REQUIRE(run_cli(args + b.string()) == 0);
    auto slurp = [](const std::filesystem::path& f) {
        std::ifstream is(f);
        return std::string(std::istreambuf_iterator<char>(is), {});
    };
    CHECK(slurp(a / "solution.json") == slurp(b / "solution.json"));
    CHECK_FALSE(slurp(a / "solution.json").empty());
}

TEST_CASE("cli: exit codes")
{
    const auto dir = scratch("codes");
    CHECK(run_cli("solve " + (dir / "missing.toml").string() + " --out " + dir.string()) == 2);
    CHECK(run_cli("solve " + test::problem_path("ex2.toml") + " --no-such-flag") == 2);
    CHECK(run_cli("frobnicate") == 2);
    CHECK(run_cli("solve " + test::problem_path("ex1_conflicting.toml") + " --paths 2000 --steps 20 --out " +
                  dir.string()) == 3);
    CHECK(run_cli("verify " + test::problem_path("ex2.toml") + " --paths 10 --out " + dir.string()) == 2);
    CHECK(run_cli("sweep " + test::problem_path("ex2.toml") + " --sweep a9=0:1:1 --paths 2000 --steps 10 --out " +
                  dir.string()) == 2);
    const auto bad = dir / "bad.toml";
    std::ofstream(bad) << "[grid]\nstart = 0.0\nend = 1.0\nsteps = 10\n[dynamics]\nxi = [1.0]\n";
    CHECK(run_cli("solve " + bad.string() + " --out " + dir.string()) == 2);
}

}
