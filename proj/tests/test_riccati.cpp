#include "support.hpp"

#include "slq/errors.hpp"
#include "slq/riccati.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace slq;

TEST_SUITE("riccati") {

TEST_CASE("first example matches (e^{1-t} - 1) Id")
{
    const SlqProblem p = test::load("ex1.toml", 2000);
    const RiccatiSolution sol = solve_riccati(p);
    double err = 0.0;
    for (int k = 0; k < sol.nodes(); ++k) {
        const double t = p.grid.time(k);
        const Matrix truth = (std::exp(1.0 - t) - 1.0) * Matrix::Identity(2, 2);
        err = std::max(err, (sol.P[static_cast<std::size_t>(k)] - truth).cwiseAbs().maxCoeff());
    }
    CHECK(err <= 1e-8);
    // S = I + P here, so its smallest eigenvalue is 1 at T
    CHECK(sol.eps_S == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(check_uniform_positivity(sol, 0.5));
}

TEST_CASE("second example matches 1/(2-t) Id")
{
    const SlqProblem p = test::load("ex2.toml", 2000);
    const RiccatiSolution sol = solve_riccati(p);
    double err = 0.0;
    for (int k = 0; k < sol.nodes(); ++k) {
        const double t = p.grid.time(k);
        err = std::max(err, (sol.P[static_cast<std::size_t>(k)] - Matrix::Identity(2, 2) / (2.0 - t)).cwiseAbs().maxCoeff());
    }
    CHECK(err <= 1e-8);
}

TEST_CASE("RK4 error shrinks at fourth order")
{
    auto error = [](int N) {
        const SlqProblem p = test::load("ex1.toml", N);
        const RiccatiSolution sol = solve_riccati(p);
        return std::abs(sol.P[0](0, 0) - (std::exp(1.0) - 1.0));
    };
    const double ratio = error(10) / error(20);
    CHECK(ratio > 12.0);
    CHECK(ratio < 20.0);
}

TEST_CASE("gains are consistent with P")
{
    const SlqProblem p = test::load("ex1.toml", 50);
    const RiccatiSolution sol = solve_riccati(p);
    for (int k = 0; k < sol.nodes(); k += 7) {
        const auto ks = static_cast<std::size_t>(k);
        const double t = p.grid.time(k);
        const Matrix& P = sol.P[ks];
        const Matrix S = p.I(t) + p.D(t).transpose() * P * p.D(t);
        const Matrix L = p.F(t).transpose() + p.B(t).transpose() * P + p.D(t).transpose() * P * p.C(t);
        CHECK((sol.S[ks] - S).norm() < 1e-12);
        CHECK((sol.L[ks] - L).norm() < 1e-12);
        CHECK((sol.S_inv_L[ks] - S.inverse() * L).norm() < 1e-12);
        CHECK((P - P.transpose()).norm() == 0.0);
    }
}

TEST_CASE("csv has one row per node")
{
    const SlqProblem p = test::load("ex2.toml", 10);
    std::ostringstream os;
    write_riccati_csv(solve_riccati(p), os);
    std::istringstream is(os.str());
    std::string line;
    int rows = 0;
    while (std::getline(is, line)) ++rows;
    CHECK(rows == 1 + 11);
}

}
