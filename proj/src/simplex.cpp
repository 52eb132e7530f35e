#include "slq/simplex.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace slq {

namespace {

class Tableau {
public:
    Tableau(Matrix t, std::vector<Eigen::Index> basis, double tol) : t_(std::move(t)), basis_(std::move(basis)), tol_(tol) {}

    Eigen::Index rows() const { return t_.rows(); }
    Eigen::Index rhs() const { return t_.cols() - 1; }
    const Matrix& table() const { return t_; }
    const std::vector<Eigen::Index>& basis() const { return basis_; }

    void pivot(Eigen::Index row, Eigen::Index col)
    {
        t_.row(row) /= t_(row, col);
        for (Eigen::Index i = 0; i < rows(); ++i) {
            if (i != row && t_(i, col) != 0.0) t_.row(i) -= t_(i, col) * t_.row(row);
        }
        basis_[static_cast<std::size_t>(row)] = col;
    }

    /// Minimizes costᵀy over columns [0, usable). Returns false if unbounded.
    bool minimize(const Vector& cost, Eigen::Index usable)
    {
        for (;;) {
            Eigen::Index entering = -1;
            for (Eigen::Index j = 0; j < usable; ++j) {
                double reduced = cost(j);
                for (Eigen::Index i = 0; i < rows(); ++i) reduced -= cost(basis_[static_cast<std::size_t>(i)]) * t_(i, j);
                if (reduced < -tol_) {
                    entering = j;
                    break;
                }
            }
            if (entering < 0) return true;
            Eigen::Index leaving = -1;
            double best = std::numeric_limits<double>::infinity();
            for (Eigen::Index i = 0; i < rows(); ++i) {
                if (t_(i, entering) <= tol_) continue;
                const double ratio = t_(i, rhs()) / t_(i, entering);
                if (leaving < 0 || ratio < best - tol_) {
                    best = ratio;
                    leaving = i;
                } else if (ratio <= best + tol_ &&
                           basis_[static_cast<std::size_t>(i)] < basis_[static_cast<std::size_t>(leaving)]) {
                    leaving = i;
                }
            }
            if (leaving < 0) return false;
            pivot(leaving, entering);
        }
    }

    double value(const Vector& cost) const
    {
        double v = 0.0;
        for (Eigen::Index i = 0; i < rows(); ++i) v += cost(basis_[static_cast<std::size_t>(i)]) * t_(i, rhs());
        return v;
    }

private:
    Matrix t_;
    std::vector<Eigen::Index> basis_;
    double tol_;
};

}  // namespace

LpResult solve_lp(const Vector& c, const Matrix& A_ub, const Vector& b_ub, const Matrix& A_eq, const Vector& b_eq,
                  double tol)
{
    const Eigen::Index nv = c.size();
    const Eigen::Index mu = A_ub.rows();
    const Eigen::Index me = A_eq.rows();
    const Eigen::Index m = mu + me;
    // Columns: x⁺ (nv), x⁻ (nv), slacks (mu), artificials (m), rhs.
    const Eigen::Index structural = 2 * nv + mu;
    Matrix t = Matrix::Zero(m, structural + m + 1);
    for (Eigen::Index i = 0; i < mu; ++i) {
        t.block(i, 0, 1, nv) = A_ub.row(i);
        t.block(i, nv, 1, nv) = -A_ub.row(i);
        t(i, 2 * nv + i) = 1.0;
        t(i, structural + m) = b_ub(i);
    }
    for (Eigen::Index i = 0; i < me; ++i) {
        t.block(mu + i, 0, 1, nv) = A_eq.row(i);
        t.block(mu + i, nv, 1, nv) = -A_eq.row(i);
        t(mu + i, structural + m) = b_eq(i);
    }
    std::vector<Eigen::Index> basis(static_cast<std::size_t>(m));
    for (Eigen::Index i = 0; i < m; ++i) {
        if (t(i, structural + m) < 0.0) t.row(i) *= -1.0;
        t(i, structural + i) = 1.0;
        basis[static_cast<std::size_t>(i)] = structural + i;
    }
    const double scale = 1.0 + t.cwiseAbs().maxCoeff();
    Tableau tab(std::move(t), std::move(basis), tol * scale);

    Vector phase1 = Vector::Zero(structural + m);
    phase1.tail(m).setOnes();
    tab.minimize(phase1, structural + m);
    LpResult out;
    if (tab.value(phase1) > 1e3 * tol * scale) {
        out.status = LpStatus::Infeasible;
        return out;
    }
    for (Eigen::Index i = 0; i < tab.rows(); ++i) {
        if (tab.basis()[static_cast<std::size_t>(i)] < structural) continue;
        for (Eigen::Index j = 0; j < structural; ++j) {
            if (std::abs(tab.table()(i, j)) > tol * scale) {
                tab.pivot(i, j);
                break;
            }
        }
    }

    Vector phase2 = Vector::Zero(structural + m);
    phase2.head(nv) = -c;
    phase2.segment(nv, nv) = c;
    if (!tab.minimize(phase2, structural)) {
        out.status = LpStatus::Unbounded;
        return out;
    }
    Vector y = Vector::Zero(structural + m);
    for (Eigen::Index i = 0; i < tab.rows(); ++i) y(tab.basis()[static_cast<std::size_t>(i)]) = tab.table()(i, tab.rhs());
    out.status = LpStatus::Optimal;
    out.x = y.head(nv) - y.segment(nv, nv);
    out.objective = c.dot(out.x);
    return out;
}

}  // namespace slq
