#pragma once

#include <Eigen/Dense>

namespace slq {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

/// (M + Mᵀ)/2.
Matrix symmetrize(const Matrix& m);

/// Largest absolute entry of M − Mᵀ.
double asymmetry(const Matrix& m);

double min_eigenvalue(const Matrix& sym);
double max_eigenvalue(const Matrix& sym);

/// Inverse of a symmetric matrix through its eigendecomposition; also reports the
/// smallest eigenvalue so callers can certify positivity.
struct SymmetricInverse {
    Matrix inverse;
    double min_eig = 0.0;
};
SymmetricInverse symmetric_inverse(const Matrix& sym);

/// Principal square root of a symmetric positive semidefinite matrix.
Matrix sqrt_psd(const Matrix& sym);

/// Moore-Penrose pseudo-inverse with singular values below rel_tol·σ_max treated as zero.
Matrix pseudo_inverse(const Matrix& m, double rel_tol = 1e-12);

/// Matrix exponential.
Matrix expm(const Matrix& m);

bool all_finite(const Matrix& m);

}  // namespace slq
