#include "slq/riccati.hpp"

#include "slq/errors.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>

namespace slq {

namespace {

struct Coefficients {
    Matrix A, B, C, D, E, F, I;

    Coefficients(const SlqProblem& p, double t)
        : A(p.A(t)), B(p.B(t)), C(p.C(t)), D(p.D(t)), E(p.E(t)), F(p.F(t)), I(p.I(t))
    {
    }

    Matrix S(const Matrix& P) const { return symmetrize(I + D.transpose() * P * D); }
    Matrix L(const Matrix& P) const { return F.transpose() + B.transpose() * P + D.transpose() * P * C; }

    // dP/dt
    Matrix rhs(const Matrix& P) const
    {
        const Matrix l = L(P);
        const Matrix s_inv_l = S(P).ldlt().solve(l);
        return -(E + P * A + A.transpose() * P + C.transpose() * P * C - l.transpose() * s_inv_l);
    }
};

}  // namespace

RiccatiSolution solve_riccati(const SlqProblem& p)
{
    const TimeGrid& g = p.grid;
    const int N = g.N;
    const double h = -g.dt();

    RiccatiSolution sol;
    sol.grid = g;
    sol.P.resize(static_cast<std::size_t>(N + 1));
    sol.P[static_cast<std::size_t>(N)] = p.M;

    const double bound = 1e12 * (1.0 + p.M.cwiseAbs().maxCoeff());
    for (int k = N - 1; k >= 0; --k) {
        const double t1 = g.time(k + 1);
        const double t0 = g.time(k);
        const double tm = 0.5 * (t0 + t1);
        const Coefficients c1(p, t1), cm(p, tm), c0(p, t0);
        const Matrix& P1 = sol.P[static_cast<std::size_t>(k + 1)];
        const Matrix k1 = c1.rhs(P1);
        const Matrix k2 = cm.rhs(P1 + 0.5 * h * k1);
        const Matrix k3 = cm.rhs(P1 + 0.5 * h * k2);
        const Matrix k4 = c0.rhs(P1 + h * k3);
        Matrix P0 = symmetrize(P1 + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
        if (!P0.allFinite() || P0.cwiseAbs().maxCoeff() > bound) {
            throw Error(ErrorCode::StepUnstable, "riccati", "P blew up at t=" + std::to_string(t0));
        }
        sol.P[static_cast<std::size_t>(k)] = std::move(P0);
    }

    sol.S.resize(sol.P.size());
    sol.L.resize(sol.P.size());
    sol.S_inv.resize(sol.P.size());
    sol.S_inv_L.resize(sol.P.size());
    sol.S_min_eig.resize(sol.P.size());
    sol.eps_S = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= N; ++k) {
        const auto i = static_cast<std::size_t>(k);
        const Coefficients c(p, g.time(k));
        sol.S[i] = c.S(sol.P[i]);
        sol.L[i] = c.L(sol.P[i]);
        const SymmetricInverse inv = symmetric_inverse(sol.S[i]);
        sol.S_min_eig[i] = inv.min_eig;
        sol.eps_S = std::min(sol.eps_S, inv.min_eig);
        if (!(inv.min_eig >= kPositivityTolerance)) {
            throw Error(ErrorCode::PositivityLost, "riccati",
                        "smallest eigenvalue of S is " + std::to_string(inv.min_eig) + " at t=" +
                            std::to_string(g.time(k)));
        }
        sol.S_inv[i] = inv.inverse;
        sol.S_inv_L[i] = inv.inverse * sol.L[i];
    }
    return sol;
}

bool check_uniform_positivity(const RiccatiSolution& sol, double eps)
{
    for (double e : sol.S_min_eig) {
        if (e < eps) return false;
    }
    return true;
}

void write_riccati_csv(const RiccatiSolution& sol, std::ostream& os)
{
    const Eigen::Index n = sol.P.empty() ? 0 : sol.P.front().rows();
    os << "t";
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) os << ",P" << i + 1 << j + 1;
    }
    os << ",eigmin_S\n";
    os << std::setprecision(17);
    for (int k = 0; k < sol.nodes(); ++k) {
        const auto idx = static_cast<std::size_t>(k);
        os << sol.grid.time(k);
        const Matrix& P = sol.P[idx];
        for (Eigen::Index j = 0; j < n; ++j) {
            for (Eigen::Index i = 0; i < n; ++i) os << "," << P(i, j);
        }
        os << "," << sol.S_min_eig[idx] << "\n";
    }
}

}  // namespace slq
