#include "slq/bsde.hpp"

#include "slq/errors.hpp"

#include <algorithm>
#include <cmath>

namespace slq {

namespace {

// Y·Aᵀ on every n-wide column block: applies A to each stacked n-vector.
Matrix apply_blocks(const Matrix& Y, const Matrix& A)
{
    const Eigen::Index n = A.rows();
    Matrix out(Y.rows(), Y.cols());
    for (Eigen::Index j = 0; j < Y.cols() / n; ++j) {
        out.middleCols(j * n, n).noalias() = Y.middleCols(j * n, n) * A.transpose();
    }
    return out;
}

Eigen::Index state_dim(const std::vector<LinearBsdeSystem>& systems)
{
    return systems.empty() ? 0 : systems.front().terminal.dim();
}

void add_field(Matrix& out, Eigen::Index col0, const Vector& w, const RandomField& field,
               const Eigen::Ref<const Vector>& b, bool derivative, Execution exec)
{
    if (w.isZero(0.0)) return;
    const Eigen::Index n = w.size();
    if (!derivative && field.is_deterministic()) {
        out.middleCols(col0, n).rowwise() += w.transpose();
        return;
    }
    for_each_chunk(b.size(), exec, [&](Eigen::Index begin, Eigen::Index end) {
        for (Eigen::Index p = begin; p < end; ++p) {
            const double z = derivative ? field.noise_derivative(b(p)) : field.noise(b(p));
            out.row(p).segment(col0, n) += z * w.transpose();
        }
    });
}

Matrix driver_values(const std::vector<LinearBsdeSystem>& systems, int k, double t,
                     const Eigen::Ref<const Vector>& b, Execution exec)
{
    const Eigen::Index n = state_dim(systems);
    Matrix H = Matrix::Zero(b.size(), n * static_cast<Eigen::Index>(systems.size()));
    for (std::size_t j = 0; j < systems.size(); ++j) {
        for (const DriverTerm& term : systems[j].driver) {
            if (term.field.is_zero()) continue;
            const Vector w = term.weight[static_cast<std::size_t>(k)] * term.field.base_at(t);
            add_field(H, static_cast<Eigen::Index>(j) * n, w, term.field, b, false, exec);
        }
    }
    return H;
}

Matrix terminal_values(const std::vector<LinearBsdeSystem>& systems, double T, const Eigen::Ref<const Vector>& b,
                       bool derivative, Execution exec)
{
    const Eigen::Index n = state_dim(systems);
    Matrix Y = Matrix::Zero(b.size(), n * static_cast<Eigen::Index>(systems.size()));
    for (std::size_t j = 0; j < systems.size(); ++j) {
        const RandomField& f = systems[j].terminal;
        if (f.is_zero()) continue;
        if (derivative && f.declared_derivative()) {
            const Expression& d = *f.declared_derivative();
            const Vector w = f.base()(T);
            for_each_chunk(b.size(), exec, [&](Eigen::Index begin, Eigen::Index end) {
                for (Eigen::Index p = begin; p < end; ++p) {
                    Y.row(p).segment(static_cast<Eigen::Index>(j) * n, n) += d(T, b(p)) * w.transpose();
                }
            });
            continue;
        }
        add_field(Y, static_cast<Eigen::Index>(j) * n, f.base_at(T), f, b, derivative, exec);
    }
    return Y;
}

void store(std::vector<SurrogatePath>& paths, int k, const Matrix& coef)
{
    for (std::size_t j = 0; j < paths.size(); ++j) {
        const Eigen::Index n = paths[j].dim();
        paths[j].coefficients(k) = coef.middleCols(static_cast<Eigen::Index>(j) * n, n);
    }
}

}  // namespace

LinearBsdeResult solve_linear_bsde(const TimeGrid& grid, const BrownianEnsemble& ens, const Basis& basis,
                                   const std::vector<Matrix>& Ay, const std::vector<Matrix>& Az,
                                   const std::vector<LinearBsdeSystem>& systems, Execution exec)
{
    LinearBsdeResult out;
    if (systems.empty()) return out;
    const int N = grid.N;
    const Eigen::Index n = state_dim(systems);
    const Eigen::Index W = n * static_cast<Eigen::Index>(systems.size());
    const Eigen::Index paths = ens.n_paths();
    const double dt = grid.dt();
    for (std::size_t j = 0; j < systems.size(); ++j) {
        out.Y.emplace_back(grid, basis, n);
        out.Z.emplace_back(grid, basis, n);
    }
    if (paths <= basis.size()) {
        throw Error(ErrorCode::RegressionSingular, "bsde",
                    "need more paths than basis functions (" + std::to_string(basis.size()) + ")");
    }

    const Vector bN = ens.node(N);
    const RegressionPlan terminal_plan(basis, bN, exec);
    if (terminal_plan.dropped() > 0 || terminal_plan.condition() > 1e12) {
        throw Error(ErrorCode::RegressionSingular, "bsde",
                    "basis Gram matrix at T has condition number " + std::to_string(terminal_plan.condition()));
    }
    Matrix Ycur = terminal_values(systems, grid.T, bN, false, exec);
    Matrix Zcur = terminal_values(systems, grid.T, bN, true, exec);
    {
        Matrix both(paths, 2 * W);
        both << Ycur, Zcur;
        const Matrix coef = terminal_plan.fit(both);
        const RowVector r2 = terminal_plan.r_squared(Ycur, coef.leftCols(W), bN);
        for (Eigen::Index j = 0; j < W; ++j) {
            if (r2(j) < 1.0 - 1e-10) {
                throw Error(ErrorCode::BasisTooSmall, "bsde",
                            "terminal data not spanned by basis {" + basis.spec() + "} (R^2 = " +
                                std::to_string(r2(j)) + ")");
            }
        }
        store(out.Y, N, coef.leftCols(W));
        store(out.Z, N, coef.rightCols(W));
    }
    Matrix coef_next(basis.size(), W), coefZ_next(basis.size(), W);
    for (std::size_t j = 0; j < systems.size(); ++j) {
        coef_next.middleCols(static_cast<Eigen::Index>(j) * n, n) = out.Y[j].coefficients(N);
        coefZ_next.middleCols(static_cast<Eigen::Index>(j) * n, n) = out.Z[j].coefficients(N);
    }
    Matrix H_next = driver_values(systems, N, grid.T, bN, exec);
    const Matrix Id = Matrix::Identity(n, n);

    bool has_driver = false;
    for (const LinearBsdeSystem& sys : systems) {
        for (const DriverTerm& term : sys.driver) has_driver = has_driver || !term.field.is_zero();
    }
    const Eigen::Index width = has_driver ? 3 * W : 2 * W;
    Matrix targets(paths, width), Zt(paths, W), f1(paths, W), Hk;
    Vector bk(paths), dB(paths);

    for (int k = N - 1; k >= 0; --k) {
        const auto ks = static_cast<std::size_t>(k);
        const double t = grid.time(k);
        bk = ens.node(k);
        dB = ens.node(k + 1) - bk;
        const Matrix phi = basis.design(bk, exec);
        const RegressionPlan plan = RegressionPlan::from_design(basis, phi, exec);
        if (has_driver) Hk = driver_values(systems, k, t, bk, exec);
        const Matrix AyT = Ay[ks + 1].transpose();
        const Matrix AzT = Az[ks + 1].transpose();

        // Martingale control variates: Z̃ΔB has zero conditional mean, as does Z̃(ΔB²/dt − 1),
        // with Z̃ = Z_{k+1} evaluated at B_k.
        for_each_chunk(paths, exec, [&](Eigen::Index begin, Eigen::Index end) {
            const Eigen::Index len = end - begin;
            const auto ph = phi.middleRows(begin, len);
            Zt.middleRows(begin, len).noalias() = ph * coefZ_next;
            targets.block(begin, W, len, W).noalias() = ph * coef_next;
            for (Eigen::Index j = 0; j < W / n; ++j) {
                auto fb = f1.block(begin, j * n, len, n);
                fb.noalias() = Ycur.block(begin, j * n, len, n) * AyT;
                fb.noalias() += Zcur.block(begin, j * n, len, n) * AzT;
            }
            if (has_driver) f1.middleRows(begin, len) += H_next.middleRows(begin, len);
            const auto db = dB.segment(begin, len).array();
            const Eigen::ArrayXd w = db / dt;
            const Eigen::ArrayXd z2 = w * db - 1.0;
            for (Eigen::Index c = 0; c < W; ++c) {
                const auto y = Ycur.col(c).segment(begin, len).array();
                const auto z = Zt.col(c).segment(begin, len).array();
                auto yhat = targets.col(W + c).segment(begin, len).array();
                yhat = (y - yhat) * w - z * z2;
                targets.col(c).segment(begin, len).array() =
                    y + 0.5 * dt * f1.col(c).segment(begin, len).array() - z * db;
            }
            if (has_driver) targets.block(begin, 2 * W, len, W) = Hk.middleRows(begin, len);
        });

        const Matrix coef = plan.fit(targets);
        const Matrix coefZ = coef.middleCols(W, W);
        Matrix rhs = coef.leftCols(W) + 0.5 * dt * apply_blocks(coefZ, Az[ks]);
        if (has_driver) rhs += 0.5 * dt * coef.rightCols(W);
        const Matrix implicit = (Id - 0.5 * dt * Ay[ks]).inverse();
        const Matrix coefY = apply_blocks(rhs, implicit);
        if (!coefY.allFinite() || !coefZ.allFinite()) {
            throw Error(ErrorCode::RegressionSingular, "bsde", "non-finite regression at t=" + std::to_string(t));
        }
        store(out.Y, k, coefY);
        store(out.Z, k, coefZ);

        for_each_chunk(paths, exec, [&](Eigen::Index begin, Eigen::Index end) {
            const Eigen::Index len = end - begin;
            const auto ph = phi.middleRows(begin, len);
            Ycur.middleRows(begin, len).noalias() = ph * coefY;
            Zcur.middleRows(begin, len).noalias() = ph * coefZ;
        });
        if (has_driver) H_next.swap(Hk);
        coef_next = coefY;
        coefZ_next = coefZ;
    }
    return out;
}

LinearBsdeResult solve_linear_ode(const TimeGrid& grid, const std::vector<Matrix>& Ay,
                                  const std::vector<LinearBsdeSystem>& systems)
{
    LinearBsdeResult out;
    if (systems.empty()) return out;
    const Basis basis = Basis::constant_only();
    const int N = grid.N;
    const Eigen::Index n = state_dim(systems);
    const double dt = grid.dt();
    for (std::size_t j = 0; j < systems.size(); ++j) {
        out.Y.emplace_back(grid, basis, n);
        out.Z.emplace_back(grid, basis, n);
    }
    const Vector zero = Vector::Zero(1);
    Matrix Y = terminal_values(systems, grid.T, zero, false, Execution::Serial);
    store(out.Y, N, Y);
    Matrix H_next = driver_values(systems, N, grid.T, zero, Execution::Serial);
    const Matrix Id = Matrix::Identity(n, n);
    for (int k = N - 1; k >= 0; --k) {
        const auto ks = static_cast<std::size_t>(k);
        const Matrix Hk = driver_values(systems, k, grid.time(k), zero, Execution::Serial);
        const Matrix rhs = Y + 0.5 * dt * (apply_blocks(Y, Ay[ks + 1]) + H_next + Hk);
        Y = apply_blocks(rhs, (Id - 0.5 * dt * Ay[ks]).inverse());
        store(out.Y, k, Y);
        H_next = Hk;
    }
    return out;
}

Marginals Marginals::from_paths(const BrownianEnsemble& ens)
{
    const auto n = static_cast<double>(ens.n_paths());
    return {ens.values(), Vector::Constant(ens.n_paths(), 1.0 / n)};
}

Marginals Marginals::gaussian(const TimeGrid& grid)
{
    const HermiteRule& rule = hermite_rule();
    Marginals m{Matrix(rule.nodes.size(), grid.nodes()), rule.weights};
    for (int k = 0; k <= grid.N; ++k) m.b.col(k) = std::sqrt(std::max(grid.time(k), 0.0)) * rule.nodes;
    return m;
}

Marginals Marginals::origin(const TimeGrid& grid)
{
    return {Matrix::Zero(1, grid.nodes()), Vector::Ones(1)};
}

Matrix integrate_inner_products(const std::vector<const SurrogatePath*>& paths, const std::vector<Matrix>& weight,
                                const Marginals& marg, Execution exec)
{
    const Matrix& b_values = marg.b;
    const auto P = static_cast<Eigen::Index>(paths.size());
    if (P == 0) return Matrix::Zero(0, 0);
    const TimeGrid& grid = paths.front()->grid();
    const Eigen::Index m = paths.front()->dim();
    const Eigen::Index rows = b_values.rows();
    Matrix total = Matrix::Zero(P, P);
    for (int k = 0; k <= grid.N; ++k) {
        const Vector b = b_values.col(k);
        Matrix X(rows, m * P);
        for (Eigen::Index i = 0; i < P; ++i) {
            const Matrix v = paths[static_cast<std::size_t>(i)]->evaluate_node(k, b, exec);
            for (Eigen::Index c = 0; c < m; ++c) X.col(c * P + i) = v.col(c);
        }
        const Matrix G = reduce_chunks(rows, exec, Matrix(Matrix::Zero(m * P, m * P)),
                                       [&](Eigen::Index begin, Eigen::Index end, Matrix& acc) {
                                           const auto block = X.middleRows(begin, end - begin);
                                           acc.noalias() += block.transpose() *
                                                            marg.w.segment(begin, end - begin).asDiagonal() * block;
                                       });
        const Matrix& Wk = weight[static_cast<std::size_t>(k)];
        Matrix Mk = Matrix::Zero(P, P);
        for (Eigen::Index c = 0; c < m; ++c) {
            for (Eigen::Index d = 0; d < m; ++d) {
                if (Wk(c, d) != 0.0) Mk += Wk(c, d) * G.block(c * P, d * P, P, P);
            }
        }
        const double w = (k == 0 || k == grid.N) ? 0.5 * grid.dt() : grid.dt();
        total += w * Mk;
    }
    return symmetrize(total);
}

Vector node_mean(const SurrogatePath& path, int k, const Marginals& marg, Execution exec)
{
    return path.evaluate_node(k, marg.b.col(k), exec).transpose() * marg.w;
}

namespace {

struct Operators {
    std::vector<Matrix> Ay, Az, feedforward;  // feedforward = −LᵀS⁻¹ (n×m)
};

Operators corrected_operators(const SlqProblem& p, const RiccatiSolution& ric)
{
    Operators ops;
    for (int k = 0; k <= p.grid.N; ++k) {
        const double t = p.grid.time(k);
        const Matrix LtSinv = ric.S_inv_L[static_cast<std::size_t>(k)].transpose();
        ops.Ay.push_back(p.A(t).transpose() - LtSinv * p.B(t).transpose());
        ops.Az.push_back(p.C(t).transpose() - LtSinv * p.D(t).transpose());
        ops.feedforward.push_back(-LtSinv);
    }
    return ops;
}

std::vector<Matrix> identity_path(const TimeGrid& grid, Eigen::Index n)
{
    return std::vector<Matrix>(static_cast<std::size_t>(grid.nodes()), Matrix::Identity(n, n));
}

std::vector<LinearBsdeSystem> corrected_systems(const SlqProblem& p, const Operators& ops)
{
    const auto I = identity_path(p.grid, p.n());
    std::vector<LinearBsdeSystem> systems;
    systems.push_back({p.N, {{I, p.G}, {ops.feedforward, p.K}}});
    for (const Constraint& c : p.constraints) {
        systems.push_back({c.gamma, {{I, c.alpha}, {ops.feedforward, c.beta}}});
    }
    return systems;
}

// ρ = offset + BᵀY + DᵀZ as a surrogate.
SurrogatePath control_projection(const SlqProblem& p, const SurrogatePath& Y, const SurrogatePath& Z,
                                  const RandomField& offset)
{
    SurrogatePath out(p.grid, Y.basis(), p.m());
    for (int k = 0; k <= p.grid.N; ++k) {
        const double t = p.grid.time(k);
        out.coefficients(k) = Y.coefficients(k) * p.B(t) + Z.coefficients(k) * p.D(t);
    }
    out.add_offset(offset);
    return out;
}

BsdeSolution assemble(const SlqProblem& p, const RiccatiSolution& ric, LinearBsdeResult res, const Basis& basis,
                      const Marginals& marg, Execution exec, bool analytic)
{
    BsdeSolution sol;
    sol.grid = p.grid;
    sol.basis = basis;
    sol.analytic = analytic;
    sol.Q = std::move(res.Y[0]);
    sol.pi = std::move(res.Z[0]);
    sol.psi = control_projection(p, sol.Q, sol.pi, p.K);
    const int l = p.l();
    for (int i = 0; i < l; ++i) {
        const auto s = static_cast<std::size_t>(i + 1);
        sol.R.push_back(std::move(res.Y[s]));
        sol.r.push_back(std::move(res.Z[s]));
        sol.rho.push_back(control_projection(p, sol.R.back(), sol.r.back(), p.constraints[s - 1].beta));
    }
    sol.Q0 = node_mean(sol.Q, 0, marg, exec);
    sol.R0 = Matrix::Zero(l, p.n());
    for (int i = 0; i < l; ++i) sol.R0.row(i) = node_mean(sol.R[static_cast<std::size_t>(i)], 0, marg, exec);

    std::vector<const SurrogatePath*> list{&sol.psi};
    for (const auto& r : sol.rho) list.push_back(&r);
    const Matrix M = integrate_inner_products(list, ric.S_inv, marg, exec);
    sol.psi_energy = M(0, 0);
    sol.cross = M.col(0).tail(l);
    sol.gram = M.bottomRightCorner(l, l);
    return sol;
}

bool all_deterministic(const SlqProblem& p)
{
    if (!p.G.is_deterministic() || !p.K.is_deterministic() || !p.N.is_deterministic()) return false;
    for (const Constraint& c : p.constraints) {
        if (!c.alpha.is_deterministic() || !c.beta.is_deterministic() || !c.gamma.is_deterministic()) return false;
    }
    return true;
}

}  // namespace

BsdeSolution solve_bsde_analytic(const SlqProblem& p, const RiccatiSolution& ric)
{
    if (!all_deterministic(p)) {
        throw Error(ErrorCode::NotDeterministic, "bsde", "analytic backend needs data independent of B");
    }
    const Operators ops = corrected_operators(p, ric);
    LinearBsdeResult res = solve_linear_ode(p.grid, ops.Ay, corrected_systems(p, ops));
    return assemble(p, ric, std::move(res), Basis::constant_only(), Marginals::origin(p.grid), Execution::Serial,
                    true);
}

BsdeSolution solve_bsde_lsmc(const SlqProblem& p, const RiccatiSolution& ric, const BrownianEnsemble& ens,
                             const Basis& basis, Execution exec, MomentRule moments)
{
    const Operators ops = corrected_operators(p, ric);
    LinearBsdeResult res = solve_linear_bsde(p.grid, ens, basis, ops.Ay, ops.Az, corrected_systems(p, ops), exec);
    const Marginals marg = moments == MomentRule::Gaussian ? Marginals::gaussian(p.grid) : Marginals::from_paths(ens);
    return assemble(p, ric, std::move(res), basis, marg, exec, false);
}

namespace {

ReducedConstraints assemble_reduced(const SlqProblem& p, LinearBsdeResult res, const Marginals& marg, Execution exec)
{
    ReducedConstraints out;
    const int l = p.l();
    out.l_prime = p.l_prime();
    out.R0_tilde = Matrix::Zero(l, p.n());
    out.a_tilde = Vector::Zero(l);
    for (int i = 0; i < l; ++i) {
        const auto s = static_cast<std::size_t>(i);
        out.rho_tilde.push_back(control_projection(p, res.Y[s], res.Z[s], p.constraints[s].beta));
        out.R0_tilde.row(i) = node_mean(res.Y[s], 0, marg, exec);
        out.a_tilde(i) = p.constraints[s].a - out.R0_tilde.row(i).dot(p.xi);
    }
    std::vector<const SurrogatePath*> list;
    for (const auto& r : out.rho_tilde) list.push_back(&r);
    out.gram = l ? integrate_inner_products(list, identity_path(p.grid, p.m()), marg, exec) : Matrix(0, 0);
    return out;
}

std::vector<LinearBsdeSystem> reduced_systems(const SlqProblem& p)
{
    const auto I = identity_path(p.grid, p.n());
    std::vector<LinearBsdeSystem> systems;
    for (const Constraint& c : p.constraints) systems.push_back({c.gamma, {{I, c.alpha}}});
    return systems;
}

void reduced_operators(const SlqProblem& p, std::vector<Matrix>& Ay, std::vector<Matrix>& Az)
{
    for (int k = 0; k <= p.grid.N; ++k) {
        const double t = p.grid.time(k);
        Ay.push_back(p.A(t).transpose());
        Az.push_back(p.C(t).transpose());
    }
}

}  // namespace

ReducedConstraints reduce_constraints(const SlqProblem& p, const BrownianEnsemble& ens, const Basis& basis,
                                      Execution exec, MomentRule moments)
{
    std::vector<Matrix> Ay, Az;
    reduced_operators(p, Ay, Az);
    LinearBsdeResult res = solve_linear_bsde(p.grid, ens, basis, Ay, Az, reduced_systems(p), exec);
    const Marginals marg = moments == MomentRule::Gaussian ? Marginals::gaussian(p.grid) : Marginals::from_paths(ens);
    return assemble_reduced(p, std::move(res), marg, exec);
}

ReducedConstraints reduce_constraints_analytic(const SlqProblem& p)
{
    if (!all_deterministic(p)) {
        throw Error(ErrorCode::NotDeterministic, "bsde", "analytic backend needs data independent of B");
    }
    std::vector<Matrix> Ay, Az;
    reduced_operators(p, Ay, Az);
    LinearBsdeResult res = solve_linear_ode(p.grid, Ay, reduced_systems(p));
    return assemble_reduced(p, std::move(res), Marginals::origin(p.grid), Execution::Serial);
}

GramReport gram_and_invertibility(const BsdeSolution& sol)
{
    GramReport g;
    g.gamma = symmetrize(sol.gram);
    const int l = sol.l();
    if (l == 0) {
        g.independent = true;
        return g;
    }
    g.eigmin = min_eigenvalue(g.gamma);
    const double trace = g.gamma.trace();
    g.independent = trace > 0.0 && g.eigmin > kRankTolerance * trace / l;
    return g;
}

}  // namespace slq
