#include "slq/feynman_kac.hpp"

#include "slq/errors.hpp"

#include <cmath>

namespace slq {

namespace {

struct Moments {
    Matrix cross;   // basis.size() × (2n·nodes), value and derivative targets
    RowVector sum;  // 2n·nodes
    RowVector sumsq;  // n·nodes
    double drift = 0.0;

    Moments& operator+=(const Moments& o)
    {
        cross += o.cross;
        sum += o.sum;
        sumsq += o.sumsq;
        drift = std::max(drift, o.drift);
        return *this;
    }
};

bool scalar_identity(const Matrix& c, double& sigma)
{
    sigma = c(0, 0);
    return (c - sigma * Matrix::Identity(c.rows(), c.cols())).cwiseAbs().maxCoeff() == 0.0;
}

}  // namespace

FeynmanKacEstimate feynman_kac_estimate(const SlqProblem& p, const RiccatiSolution& ric, const BrownianEnsemble& ens,
                                        const Basis& basis, int i, Execution exec, bool reduced)
{
    if (i < 0 || i >= p.l()) throw Error(ErrorCode::DimensionMismatch, "bsde", "constraint index out of range");
    const Constraint& con = p.constraints[static_cast<std::size_t>(i)];
    const TimeGrid& grid = p.grid;
    const int N = grid.N;
    const int nodes = grid.nodes();
    const Eigen::Index n = p.n();
    const double dt = grid.dt();

    std::vector<Matrix> a(static_cast<std::size_t>(nodes)), c(a.size());
    std::vector<Vector> h_alpha(a.size()), h_beta(a.size());
    for (int k = 0; k <= N; ++k) {
        const auto ks = static_cast<std::size_t>(k);
        const double t = grid.time(k);
        a[ks] = p.A(t).transpose();
        c[ks] = p.C(t).transpose();
        h_alpha[ks] = con.alpha.base_at(t);
        h_beta[ks] = Vector::Zero(n);
        if (!reduced) {
            const Matrix LtSinv = ric.S_inv_L[ks].transpose();
            a[ks] -= LtSinv * p.B(t).transpose();
            c[ks] -= LtSinv * p.D(t).transpose();
            h_beta[ks] = -LtSinv * con.beta.base_at(t);
        }
    }

    // Step factors: with c = σ·Id the flow factorizes into a deterministic matrix and a scalar.
    std::vector<double> sigma(static_cast<std::size_t>(N), 0.0);
    bool scalar = true;
    std::vector<Matrix> step(static_cast<std::size_t>(N)), step_inv(step.size());
    for (int k = 0; k < N; ++k) {
        const auto ks = static_cast<std::size_t>(k);
        double s = 0.0;
        if (!scalar_identity(c[ks], s)) {
            scalar = false;
            break;
        }
        sigma[ks] = s;
        step[ks] = expm((a[ks] - 0.5 * s * s * Matrix::Identity(n, n)) * dt);
        step_inv[ks] = step[ks].inverse();
    }
    std::vector<Matrix> drift_part(static_cast<std::size_t>(N));
    if (!scalar) {
        for (int k = 0; k < N; ++k) {
            const auto ks = static_cast<std::size_t>(k);
            drift_part[ks] = (a[ks] - 0.5 * c[ks] * c[ks]) * dt;
        }
    }

    std::vector<RegressionPlan> plans;
    plans.reserve(static_cast<std::size_t>(nodes));
    for (int k = 0; k <= N; ++k) plans.emplace_back(basis, ens.node(k), exec, false);
    const Eigen::Index nb = basis.size();

    const Moments zero{Matrix::Zero(nb, 2 * n * nodes), RowVector::Zero(2 * n * nodes), RowVector::Zero(n * nodes),
                       0.0};
    const Moments m = reduce_chunks(ens.n_paths(), exec, zero, [&](Eigen::Index begin, Eigen::Index end, Moments& acc) {
        Matrix V(n, n * nodes), V0(n, n * nodes);
        Vector z(nb);
        Vector U(n), dU(n), W(n), dW(n), h1(n), dh1(n), h0(n), dh0(n);
        Matrix X(n, n), E(n, n);
        const Matrix Id = Matrix::Identity(n, n);
        for (Eigen::Index path = begin; path < end; ++path) {
            V.leftCols(n) = Id;
            V0.leftCols(n) = Id;
            for (int k = 0; k < N; ++k) {
                const auto ks = static_cast<std::size_t>(k);
                const double dB = ens.increment(path, k);
                if (scalar) {
                    const double g = std::exp(sigma[ks] * dB);
                    V.middleCols((k + 1) * n, n).noalias() = g * V.middleCols(k * n, n) * step[ks];
                    V0.middleCols((k + 1) * n, n).noalias() = (1.0 / g) * step_inv[ks] * V0.middleCols(k * n, n);
                } else {
                    X = drift_part[ks] + c[ks] * dB;
                    E = expm(X);
                    V.middleCols((k + 1) * n, n).noalias() = V.middleCols(k * n, n) * E;
                    E = expm(-X);
                    V0.middleCols((k + 1) * n, n).noalias() = E * V0.middleCols(k * n, n);
                }
            }
            for (int k = 0; k <= N; ++k) {
                const double d = (V.middleCols(k * n, n) * V0.middleCols(k * n, n) - Id).cwiseAbs().maxCoeff();
                acc.drift = std::max(acc.drift, d);
            }

            auto driver = [&](int k, Vector& h, Vector& dh) {
                const auto ks = static_cast<std::size_t>(k);
                const double b = ens.B(path, k);
                h = h_alpha[ks] * con.alpha.noise(b);
                dh = h_alpha[ks] * con.alpha.noise_derivative(b);
                if (!reduced) {
                    h += h_beta[ks] * con.beta.noise(b);
                    dh += h_beta[ks] * con.beta.noise_derivative(b);
                }
            };
            const double bT = ens.B(path, N);
            U.noalias() = V.middleCols(N * n, n) * con.gamma(grid.T, bT);
            dU.noalias() = V.middleCols(N * n, n) * con.gamma.derivative(grid.T, bT);
            driver(N, h1, dh1);
            for (int k = N; k >= 0; --k) {
                if (k < N) {
                    driver(k, h0, dh0);
                    U.noalias() += 0.5 * dt * (V.middleCols((k + 1) * n, n) * h1 + V.middleCols(k * n, n) * h0);
                    dU.noalias() += 0.5 * dt * (V.middleCols((k + 1) * n, n) * dh1 + V.middleCols(k * n, n) * dh0);
                    h1 = h0;
                    dh1 = dh0;
                }
                W.noalias() = V0.middleCols(k * n, n) * U;
                dW.noalias() = V0.middleCols(k * n, n) * dU;
                const RegressionPlan& plan = plans[static_cast<std::size_t>(k)];
                const Eigen::Index fc = plan.feature_count();
                plan.features(ens.B(path, k), z.data());
                const Eigen::Index col = 2 * n * k;
                acc.cross.block(0, col, fc, n).noalias() += z.head(fc) * W.transpose();
                acc.cross.block(0, col + n, fc, n).noalias() += z.head(fc) * dW.transpose();
                acc.sum.segment(col, n) += W.transpose();
                acc.sum.segment(col + n, n) += dW.transpose();
                acc.sumsq.segment(n * k, n) += W.cwiseAbs2().transpose();
            }
        }
    });

    if (!std::isfinite(m.drift) || m.drift > kInversionTolerance) {
        throw Error(ErrorCode::VInversionDrift, "bsde",
                    "max |V V0 - Id| = " + std::to_string(m.drift) + " exceeds " + std::to_string(kInversionTolerance));
    }

    FeynmanKacEstimate out;
    out.max_drift = m.drift;
    out.R = SurrogatePath(grid, basis, n);
    out.r = SurrogatePath(grid, basis, n);
    out.rho = SurrogatePath(grid, basis, p.m());
    out.mean = Matrix::Zero(nodes, n);
    out.se = Matrix::Zero(nodes, n);
    const auto count = static_cast<double>(ens.n_paths());
    for (int k = 0; k <= N; ++k) {
        const RegressionPlan& plan = plans[static_cast<std::size_t>(k)];
        const Eigen::Index fc = plan.feature_count();
        const Eigen::Index col = 2 * n * k;
        const Matrix coef = plan.coefficients(m.cross.block(0, col, fc, 2 * n) / count, m.sum.segment(col, 2 * n) / count);
        out.R.coefficients(k) = coef.leftCols(n);
        out.r.coefficients(k) = coef.rightCols(n);
        const double t = grid.time(k);
        out.rho.coefficients(k) = coef.leftCols(n) * p.B(t) + coef.rightCols(n) * p.D(t);
        const RowVector mean = m.sum.segment(col, n) / count;
        const RowVector var =
            ((m.sumsq.segment(n * k, n) / count - mean.cwiseAbs2()) * (count / std::max(count - 1.0, 1.0))).cwiseMax(0.0);
        out.mean.row(k) = mean;
        out.se.row(k) = (var / count).cwiseSqrt();
    }
    out.rho.add_offset(con.beta);
    return out;
}

}  // namespace slq
