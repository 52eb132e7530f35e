#include "slq/slater.hpp"

#include "slq/errors.hpp"
#include "slq/simplex.hpp"

#include <algorithm>
#include <cmath>

namespace slq {

SlaterWitness slater_check(const Matrix& gram, const Vector& a_tilde, int l_prime)
{
    const auto l = static_cast<Eigen::Index>(a_tilde.size());
    if (gram.rows() != l || gram.cols() != l || l_prime < 0 || l_prime > l) {
        throw Error(ErrorCode::DimensionMismatch, "slater", "Gram matrix and budgets disagree");
    }
    SlaterWitness w;
    w.scale = 1.0 + (l ? a_tilde.cwiseAbs().maxCoeff() + gram.trace() / static_cast<double>(l) : 0.0);
    const double tol = 1e-10 * w.scale;
    const Eigen::Index li = l_prime;
    const Eigen::Index le = l - li;

    if (le > 0) {
        const Matrix G_ee = symmetrize(gram.bottomRightCorner(le, le));
        const Vector a_e = a_tilde.tail(le);
        const Vector c_e = pseudo_inverse(G_ee, 1e-10) * a_e;
        const double residual = (G_ee * c_e - a_e).cwiseAbs().maxCoeff();
        if (residual > 1e-8 * w.scale) {
            throw Error(ErrorCode::Infeasible, "slater",
                        "equality constraints are contradictory (least-squares residual " + std::to_string(residual) + ")");
        }
        const double trace = G_ee.trace();
        if (!(trace > 0.0) || min_eigenvalue(G_ee) <= kRankTolerance * trace / static_cast<double>(le)) {
            throw Error(ErrorCode::GramSingularEquality, "slater", "equality constraint vectors are linearly dependent");
        }
    }

    // Variables (c_1..c_l, t): maximize t with G_I c + t ≤ ã_I, G_E c = ã_E, t ≤ scale.
    Vector cost = Vector::Zero(l + 1);
    cost(l) = 1.0;
    Matrix A_ub = Matrix::Zero(li + 1, l + 1);
    Vector b_ub(li + 1);
    A_ub.topLeftCorner(li, l) = gram.topRows(li);
    A_ub.block(0, l, li, 1).setOnes();
    b_ub.head(li) = a_tilde.head(li);
    A_ub(li, l) = 1.0;
    b_ub(li) = w.scale;
    Matrix A_eq = Matrix::Zero(le, l + 1);
    A_eq.leftCols(l) = gram.bottomRows(le);
    const Vector b_eq = a_tilde.tail(le);

    const LpResult lp = solve_lp(cost, A_ub, b_ub, A_eq, b_eq, tol);
    if (lp.status != LpStatus::Optimal) {
        throw Error(ErrorCode::Infeasible, "slater", "no control in the span of the constraint vectors meets the equalities");
    }
    w.coefficients = lp.x.head(l);
    w.values = gram * w.coefficients;
    w.margins = a_tilde - w.values;
    w.margin = li ? w.margins.head(li).minCoeff() : w.scale;
    if (w.margin < kSlaterMargin * w.scale) {
        Eigen::Index worst = 0;
        w.margins.head(li).minCoeff(&worst);
        throw Error(ErrorCode::Infeasible, "slater",
                    "no strictly feasible control: best margin " + std::to_string(w.margin) + " on constraint " +
                        std::to_string(worst + 1));
    }
    return w;
}

SlaterWitness slater_check(const ReducedConstraints& reduced)
{
    return slater_check(reduced.gram, reduced.a_tilde, reduced.l_prime);
}

}  // namespace slq
