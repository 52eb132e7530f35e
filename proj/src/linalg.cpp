#include "slq/linalg.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>

namespace slq {

Matrix symmetrize(const Matrix& m)
{
    return 0.5 * (m + m.transpose());
}

double asymmetry(const Matrix& m)
{
    if (m.size() == 0) return 0.0;
    return (m - m.transpose()).cwiseAbs().maxCoeff();
}

double min_eigenvalue(const Matrix& sym)
{
    if (sym.size() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

double max_eigenvalue(const Matrix& sym)
{
    if (sym.size() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
    return es.eigenvalues().maxCoeff();
}

SymmetricInverse symmetric_inverse(const Matrix& sym)
{
    Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
    const Vector& ev = es.eigenvalues();
    SymmetricInverse out;
    out.min_eig = ev.minCoeff();
    out.inverse = es.eigenvectors() * ev.cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
    out.inverse = symmetrize(out.inverse);
    return out;
}

Matrix sqrt_psd(const Matrix& sym)
{
    Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
    Vector root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return symmetrize(es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose());
}

Matrix pseudo_inverse(const Matrix& m, double rel_tol)
{
    if (m.size() == 0) return Matrix::Zero(m.cols(), m.rows());
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& sv = svd.singularValues();
    const double cutoff = rel_tol * (sv.size() > 0 ? sv(0) : 0.0);
    Vector inv = Vector::Zero(sv.size());
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        if (sv(i) > cutoff && sv(i) > 0.0) inv(i) = 1.0 / sv(i);
    }
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

Matrix expm(const Matrix& m)
{
    return m.exp();
}

bool all_finite(const Matrix& m)
{
    return m.allFinite();
}

}  // namespace slq
