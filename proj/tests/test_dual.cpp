#include "support.hpp"

#include "slq/dual.hpp"
#include "slq/errors.hpp"

#include <doctest.h>

#include <random>

using namespace slq;

namespace {

DualQuadratic make_dual(const Matrix& gram, const Vector& intercept, const Vector& a, int l_prime, double c = 0.0)
{
    DualQuadratic dq;
    dq.gram = gram;
    dq.intercept = intercept;
    dq.a = a;
    dq.l_prime = l_prime;
    dq.lin = 2.0 * (intercept - a);
    dq.const_term = c;
    return dq;
}

Matrix random_spd(std::mt19937_64& rng, int l)
{
    std::normal_distribution<double> n01;
    Matrix g(l, l);
    for (int i = 0; i < l; ++i)
        for (int j = 0; j < l; ++j) g(i, j) = n01(rng);
    return g * g.transpose() + 0.1 * Matrix::Identity(l, l);
}

Vector random_vector(std::mt19937_64& rng, int l)
{
    std::normal_distribution<double> n01;
    Vector v(l);
    for (int i = 0; i < l; ++i) v(i) = n01(rng);
    return v;
}

Vector feasible_multiplier(std::mt19937_64& rng, int l, int l_prime)
{
    Vector v = random_vector(rng, l);
    for (int i = 0; i < l_prime; ++i) v(i) = std::abs(v(i));
    return v;
}

}  // namespace

TEST_SUITE("dual") {

TEST_CASE("second example with the exact Gram matrix")
{
    // Γ = 2 Id, ⟨ξ, E R_i(0)⟩ = 1, cross term 2, constant 1
    const DualQuadratic dq = make_dual(2.0 * Matrix::Identity(2, 2), Vector::Constant(2, -1.0),
                                       (Vector(2) << -2.0, 0.0).finished(), 2, 1.0);
    const DualSolution s = solve_dual(dq);
    CHECK(s.lambda(0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(s.lambda(1) == 0.0);
    CHECK(s.value == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(s.residuals.max() <= 1e-12);
    CHECK(s.active == std::vector<int>{0});
    CHECK(s.unique);
    CHECK(s.method == "enumeration");
}

TEST_CASE("enumeration, projected gradient and projection agree")
{
    std::mt19937_64 rng(42);
    for (int trial = 0; trial < 25; ++trial) {
        const int l = 1 + trial % 5;
        const int lp = trial % (l + 1);
        const DualQuadratic dq =
            make_dual(random_spd(rng, l), random_vector(rng, l), random_vector(rng, l), lp, 0.3);
        const DualSolution enumerated = solve_dual(dq);
        DualOptions fista;
        fista.enumeration_limit = -1;
        const DualSolution iterative = solve_dual(dq, fista);
        const DualSolution projected = project_solve(dq);
        CHECK((enumerated.lambda - iterative.lambda).cwiseAbs().maxCoeff() <= 1e-8);
        CHECK((enumerated.lambda - projected.lambda).cwiseAbs().maxCoeff() <= 1e-8);
        CHECK(enumerated.residuals.max() <= 1e-8 * residual_scale(dq));
        CHECK(iterative.method != enumerated.method);
    }
}

TEST_CASE("optimum dominates random feasible multipliers")
{
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 10; ++trial) {
        const int l = 3;
        const DualQuadratic dq = make_dual(random_spd(rng, l), random_vector(rng, l), random_vector(rng, l), 2);
        const DualSolution s = solve_dual(dq);
        for (int probe = 0; probe < 50; ++probe) {
            CHECK(dual_value(dq, feasible_multiplier(rng, l, 2)) <= s.value + 1e-12);
        }
    }
}

TEST_CASE("dual objective is concave along random chords")
{
    std::mt19937_64 rng(8);
    const DualQuadratic dq = make_dual(random_spd(rng, 4), random_vector(rng, 4), random_vector(rng, 4), 4);
    for (int probe = 0; probe < 100; ++probe) {
        const Vector x = feasible_multiplier(rng, 4, 4);
        const Vector y = feasible_multiplier(rng, 4, 4);
        const double mid = dual_value(dq, 0.5 * (x + y));
        CHECK(mid >= 0.5 * (dual_value(dq, x) + dual_value(dq, y)) - 1e-12);
    }
}

TEST_CASE("KKT residuals detect each violation")
{
    const DualQuadratic dq = make_dual(2.0 * Matrix::Identity(2, 2), Vector::Constant(2, -1.0),
                                       (Vector(2) << -2.0, 0.0).finished(), 1);
    const KktResiduals r = kkt_residuals(dq, (Vector(2) << -0.1, 0.2).finished());
    CHECK(r.negativity(0) == doctest::Approx(0.1));
    CHECK(r.negativity(1) == 0.0);
    // δ − a = (−1 + 0.2 + 2, −1 − 0.4 − 0)
    CHECK(r.feasibility(0) == doctest::Approx(1.2));
    CHECK(r.feasibility(1) == doctest::Approx(1.4));
    CHECK(r.complementarity(0) == doctest::Approx(0.12));
}

TEST_CASE("singular Gram: consistent equalities are solvable but not unique")
{
    Matrix g(2, 2);
    g << 1.0, 1.0, 1.0, 1.0;
    const DualQuadratic ok = make_dual(g, (Vector(2) << 1.0, 1.0).finished(), Vector::Zero(2), 0);
    const DualSolution s = solve_dual(ok);
    CHECK_FALSE(s.unique);
    CHECK(s.residuals.max() <= 1e-10);
    CHECK_THROWS_AS(project_solve(ok), Error);

    const DualQuadratic bad = make_dual(g, (Vector(2) << 1.0, -1.0).finished(), Vector::Zero(2), 0);
    try {
        solve_dual(bad);
        FAIL("expected EqualityInfeasible");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::EqualityInfeasible);
    }
}

TEST_CASE("budget changes only move the linear term")
{
    const DualQuadratic dq = make_dual(2.0 * Matrix::Identity(2, 2), Vector::Constant(2, -1.0), Vector::Zero(2), 2, 1.0);
    const DualQuadratic moved = with_budgets(dq, (Vector(2) << -2.0, 0.0).finished());
    CHECK(moved.gram == dq.gram);
    CHECK(moved.lin(0) == doctest::Approx(2.0));
    CHECK(solve_dual(moved).lambda(0) == doctest::Approx(0.5));
    CHECK_THROWS_AS(with_budgets(dq, Vector::Zero(3)), Error);
}

TEST_CASE("too many inequalities for enumeration fall back to projected gradient")
{
    std::mt19937_64 rng(9);
    const int l = 14;
    const DualQuadratic dq = make_dual(random_spd(rng, l), random_vector(rng, l), random_vector(rng, l), l);
    const DualSolution s = solve_dual(dq);
    CHECK(s.method != "enumeration");
    CHECK(s.residuals.max() <= 1e-8 * residual_scale(dq));
    CHECK((s.lambda - project_solve(dq).lambda).cwiseAbs().maxCoeff() <= 1e-8);
}

}
