#include "support.hpp"

#include "slq/errors.hpp"
#include "slq/simplex.hpp"
#include "slq/slater.hpp"

#include <doctest.h>

using namespace slq;

namespace {

ErrorCode slater_code(const Matrix& g, const Vector& a, int lp)
{
    try {
        slater_check(g, a, lp);
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("slater_check passed");
    return ErrorCode::InvalidConfig;
}

}  // namespace

TEST_SUITE("lp") {

TEST_CASE("textbook maximization")
{
    // max 3x + 5y, x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18: optimum (2, 6), value 36
    Matrix A(3, 2);
    A << 1, 0, 0, 2, 3, 2;
    const LpResult r = solve_lp((Vector(2) << 3, 5).finished(), A, (Vector(3) << 4, 12, 18).finished(),
                                Matrix::Zero(0, 2), Vector::Zero(0));
    REQUIRE(r.status == LpStatus::Optimal);
    CHECK(r.x(0) == doctest::Approx(2.0));
    CHECK(r.x(1) == doctest::Approx(6.0));
    CHECK(r.objective == doctest::Approx(36.0));
}

TEST_CASE("free variables and equalities")
{
    // max −x − y, x + y = −3, x ≥ −5, y ≥ −5 (as −x ≤ 5, −y ≤ 5)
    Matrix A(2, 2);
    A << -1, 0, 0, -1;
    Matrix E(1, 2);
    E << 1, 1;
    const LpResult r = solve_lp((Vector(2) << -1, -1).finished(), A, (Vector(2) << 5, 5).finished(), E,
                                (Vector(1) << -3).finished());
    REQUIRE(r.status == LpStatus::Optimal);
    CHECK(r.objective == doctest::Approx(3.0));
    CHECK(r.x.sum() == doctest::Approx(-3.0));
}

TEST_CASE("infeasible and unbounded programs")
{
    Matrix A(2, 1);
    A << 1, -1;
    const LpResult inf = solve_lp((Vector(1) << 1).finished(), A, (Vector(2) << 1, -2).finished(),
                                  Matrix::Zero(0, 1), Vector::Zero(0));
    CHECK(inf.status == LpStatus::Infeasible);
    Matrix B(1, 1);
    B << -1;
    const LpResult unb = solve_lp((Vector(1) << 1).finished(), B, (Vector(1) << 0).finished(),
                                  Matrix::Zero(0, 1), Vector::Zero(0));
    CHECK(unb.status == LpStatus::Unbounded);
}

TEST_CASE("degenerate vertex terminates")
{
    // several constraints meet at the optimum (1, 1)
    Matrix A(4, 2);
    A << 1, 0, 0, 1, 1, 1, 2, 1;
    const LpResult r = solve_lp((Vector(2) << 1, 1).finished(), A, (Vector(4) << 1, 1, 2, 3).finished(),
                                Matrix::Zero(0, 2), Vector::Zero(0));
    REQUIRE(r.status == LpStatus::Optimal);
    CHECK(r.objective == doctest::Approx(2.0));
}

}

TEST_SUITE("slater") {

TEST_CASE("independent inequalities always admit a witness")
{
    const Matrix g = Matrix::Identity(2, 2);
    const SlaterWitness w = slater_check(g, (Vector(2) << -3.0, 2.0).finished(), 2);
    CHECK(w.margin >= kSlaterMargin * w.scale);
    CHECK((w.values + w.margins - (Vector(2) << -3.0, 2.0).finished()).norm() < 1e-12);
}

TEST_CASE("equalities are met exactly")
{
    Matrix g(2, 2);
    g << 2.0, 0.5, 0.5, 1.0;
    const SlaterWitness w = slater_check(g, (Vector(2) << 1.0, 0.7).finished(), 1);
    CHECK(w.values(1) == doctest::Approx(0.7).epsilon(1e-10));
    CHECK(w.margins(0) > 0.0);
}

TEST_CASE("parallel inequalities with opposite signs are infeasible")
{
    // ⟨u, ρ⟩ ≤ −1 and ⟨u, −ρ⟩ ≤ −1 cannot both hold
    Matrix g(2, 2);
    g << 1.0, -1.0, -1.0, 1.0;
    CHECK(slater_code(g, (Vector(2) << -1.0, -1.0).finished(), 2) == ErrorCode::Infeasible);
    // only a boundary point exists: not strictly feasible
    CHECK(slater_code(g, (Vector(2) << 1.0, -1.0).finished(), 2) == ErrorCode::Infeasible);
    CHECK_NOTHROW(slater_check(g, (Vector(2) << 1.5, -1.0).finished(), 2));
}

TEST_CASE("duplicated equalities")
{
    Matrix g(3, 3);
    g << 1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 1.0, 1.0;
    CHECK(slater_code(g, (Vector(3) << 1.0, 0.5, 1.5).finished(), 1) == ErrorCode::Infeasible);
    CHECK(slater_code(g, (Vector(3) << 1.0, 0.5, 0.5).finished(), 1) == ErrorCode::GramSingularEquality);
}

}
