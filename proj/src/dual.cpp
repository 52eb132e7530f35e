#include "slq/dual.hpp"

#include "slq/errors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace slq {

DualQuadratic assemble_dual(const SlqProblem& p, const RiccatiSolution& ric, const BsdeSolution& bsde)
{
    if (bsde.l() != p.l()) throw Error(ErrorCode::DimensionMismatch, "dual", "BSDE solution has wrong constraint count");
    DualQuadratic dq;
    dq.a = p.budgets();
    dq.l_prime = p.l_prime();
    dq.gram = symmetrize(bsde.gram);
    dq.intercept = bsde.R0 * p.xi - bsde.cross;
    dq.lin = 2.0 * (dq.intercept - dq.a);
    dq.const_term = p.xi.dot(ric.P.front() * p.xi) + 2.0 * p.xi.dot(bsde.Q0) - bsde.psi_energy;
    return dq;
}

DualQuadratic with_budgets(const DualQuadratic& dq, const Vector& a)
{
    if (a.size() != dq.a.size()) throw Error(ErrorCode::DimensionMismatch, "dual", "budget vector has wrong length");
    DualQuadratic out = dq;
    out.a = a;
    out.lin = 2.0 * (dq.intercept - a);
    return out;
}

Vector delta(const DualQuadratic& dq, const Vector& lambda)
{
    return dq.intercept - dq.gram * lambda;
}

double dual_value(const DualQuadratic& dq, const Vector& lambda)
{
    return dq.const_term + dq.lin.dot(lambda) - lambda.dot(dq.gram * lambda);
}

double residual_scale(const DualQuadratic& dq)
{
    if (dq.l() == 0) return 1.0;
    return 1.0 + dq.a.cwiseAbs().maxCoeff() + dq.gram.trace() / dq.l();
}

double KktResiduals::max() const
{
    double m = 0.0;
    for (const Vector* v : {&negativity, &feasibility, &complementarity}) {
        if (v->size()) m = std::max(m, v->cwiseAbs().maxCoeff());
    }
    return m;
}

KktResiduals kkt_residuals(const DualQuadratic& dq, const Vector& lambda)
{
    const int l = dq.l();
    const Vector gap = delta(dq, lambda) - dq.a;
    KktResiduals r;
    r.negativity = Vector::Zero(l);
    r.feasibility = Vector::Zero(l);
    r.complementarity = (lambda.array() * gap.array()).abs();
    for (int i = 0; i < l; ++i) {
        if (i < dq.l_prime) {
            r.negativity(i) = std::max(-lambda(i), 0.0);
            r.feasibility(i) = std::max(gap(i), 0.0);
        } else {
            r.feasibility(i) = std::abs(gap(i));
        }
    }
    return r;
}

namespace {

DualSolution finish(const DualQuadratic& dq, Vector lambda, std::string method)
{
    DualSolution s;
    for (int i = 0; i < dq.l_prime; ++i) {
        if (lambda(i) <= 0.0) lambda(i) = 0.0;
        else s.active.push_back(i);
    }
    s.residuals = kkt_residuals(dq, lambda);
    s.value = dual_value(dq, lambda);
    s.lambda = std::move(lambda);
    const int l = dq.l();
    if (l == 0) {
        s.unique = true;
    } else {
        const double trace = dq.gram.trace();
        s.unique = trace > 0.0 && min_eigenvalue(dq.gram) > kRankTolerance * trace / l;
    }
    s.method = std::move(method);
    return s;
}

std::vector<Eigen::Index> free_indices(unsigned long mask, int l_prime, int l)
{
    std::vector<Eigen::Index> f;
    for (int i = 0; i < l_prime; ++i) {
        if (mask & (1UL << i)) f.push_back(i);
    }
    for (int i = l_prime; i < l; ++i) f.push_back(i);
    return f;
}

/// Runs the pattern enumeration with a per-pattern solver returning λ_F and whether the
/// pattern's own linear system is consistent.
Vector enumerate(const DualQuadratic& dq, double tol,
                 const std::function<bool(const std::vector<Eigen::Index>&, Vector&)>& solve_pattern,
                 bool& found)
{
    const int l = dq.l();
    if (dq.l_prime > 30) throw Error(ErrorCode::InvalidConfig, "dual", "too many inequality constraints to enumerate");
    bool any_consistent = false;
    found = false;
    for (unsigned long mask = 0; mask < (1UL << dq.l_prime); ++mask) {
        const auto F = free_indices(mask, dq.l_prime, l);
        Vector lam_f;
        if (!solve_pattern(F, lam_f)) continue;
        any_consistent = true;
        Vector lambda = Vector::Zero(l);
        for (std::size_t j = 0; j < F.size(); ++j) lambda(F[j]) = lam_f(static_cast<Eigen::Index>(j));
        if (kkt_residuals(dq, lambda).max() <= tol) {
            found = true;
            return lambda;
        }
    }
    if (!any_consistent) {
        throw Error(ErrorCode::EqualityInfeasible, "dual", "equality rows delta_i(lambda) = a_i admit no solution");
    }
    return Vector::Zero(l);
}

Vector projected_gradient(const DualQuadratic& dq, const DualOptions& opts, double tol)
{
    const int l = dq.l();
    const double lmax = max_eigenvalue(dq.gram);
    if (!(lmax > 0.0)) {
        throw Error(ErrorCode::EqualityInfeasible, "dual", "zero Gram matrix: dual has no maximizer");
    }
    const double step = 1.0 / (2.0 * lmax);
    auto project = [&](Vector v) {
        for (int i = 0; i < dq.l_prime; ++i) v(i) = std::max(v(i), 0.0);
        return v;
    };
    Vector x = Vector::Zero(l), y = x;
    double theta = 1.0;
    for (long it = 0; it < opts.max_iterations; ++it) {
        const Vector grad = dq.lin - 2.0 * dq.gram * y;
        const Vector next = project(y + step * grad);
        const double theta_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * theta * theta));
        y = next + ((theta - 1.0) / theta_next) * (next - x);
        x = next;
        theta = theta_next;
        if (kkt_residuals(dq, x).max() < tol) return x;
    }
    throw Error(ErrorCode::NoConvergence, "dual",
                "projected gradient hit the iteration cap of " + std::to_string(opts.max_iterations));
}

}  // namespace

DualSolution solve_dual(const DualQuadratic& dq, const DualOptions& opts)
{
    const int l = dq.l();
    if (l == 0) return finish(dq, Vector::Zero(0), "empty");
    const double scale = residual_scale(dq);
    const double tol = opts.tolerance * scale;
    const Vector b = dq.intercept - dq.a;
    if (dq.l_prime <= opts.enumeration_limit) {
        bool found = false;
        const Vector lambda = enumerate(
            dq, tol,
            [&](const std::vector<Eigen::Index>& F, Vector& lam_f) {
                const auto k = static_cast<Eigen::Index>(F.size());
                Matrix G(k, k);
                Vector rhs(k);
                for (Eigen::Index i = 0; i < k; ++i) {
                    rhs(i) = b(F[static_cast<std::size_t>(i)]);
                    for (Eigen::Index j = 0; j < k; ++j) {
                        G(i, j) = dq.gram(F[static_cast<std::size_t>(i)], F[static_cast<std::size_t>(j)]);
                    }
                }
                lam_f = k ? Vector(pseudo_inverse(G, 1e-12) * rhs) : Vector(0);
                return k == 0 || (G * lam_f - rhs).cwiseAbs().maxCoeff() <= 1e-8 * scale;
            },
            found);
        if (found) return finish(dq, lambda, "enumeration");
    }
    return finish(dq, projected_gradient(dq, opts, tol), "projected-gradient");
}

DualSolution project_solve(const DualQuadratic& dq, const DualOptions& opts)
{
    const int l = dq.l();
    if (l == 0) return finish(dq, Vector::Zero(0), "projection");
    const double trace = dq.gram.trace();
    if (!(trace > 0.0) || min_eigenvalue(dq.gram) <= kRankTolerance * trace / l) {
        throw Error(ErrorCode::GramSingular, "dual", "projection form needs an invertible Gram matrix");
    }
    const double scale = residual_scale(dq);
    const double tol = opts.tolerance * scale;
    const Matrix rho_s = sqrt_psd(dq.gram);
    const Vector mu0 = rho_s.ldlt().solve(dq.intercept - dq.a);
    bool found = false;
    const Vector lambda = enumerate(
        dq, tol,
        [&](const std::vector<Eigen::Index>& F, Vector& lam_f) {
            const auto k = static_cast<Eigen::Index>(F.size());
            Matrix cols(l, k);
            for (Eigen::Index j = 0; j < k; ++j) cols.col(j) = rho_s.col(F[static_cast<std::size_t>(j)]);
            lam_f = k ? Vector(cols.colPivHouseholderQr().solve(mu0)) : Vector(0);
            return true;
        },
        found);
    if (!found) {
        throw Error(ErrorCode::NoConvergence, "dual", "no sign pattern satisfies the projection optimality conditions");
    }
    return finish(dq, lambda, "projection");
}

}  // namespace slq
