#include "slq/montecarlo.hpp"

#include "slq/errors.hpp"

#include <cmath>
#include <ostream>

namespace slq {

SurrogatePath combined_offset(const BsdeSolution& bsde, const Vector& lambda)
{
    if (lambda.size() != bsde.l()) throw Error(ErrorCode::DimensionMismatch, "montecarlo", "lambda has wrong length");
    SurrogatePath out = bsde.psi;
    for (int i = 0; i < bsde.l(); ++i) {
        const double w = lambda(i);
        if (w == 0.0) continue;
        const SurrogatePath& rho = bsde.rho[static_cast<std::size_t>(i)];
        for (int k = 0; k < out.nodes(); ++k) out.coefficients(k) += w * rho.coefficients(k);
        for (const RandomField& f : rho.offsets()) out.add_offset(f.scaled(w));
    }
    return out;
}

namespace {

struct NodeData {
    Matrix A, B, C, D, E, F, I, gain, S_inv;
    Vector g, k;
    std::vector<Vector> alpha, beta;
};

Vector noise_values(const RandomField& f, const Eigen::Ref<const Vector>& b)
{
    Vector out(b.size());
    for (Eigen::Index p = 0; p < b.size(); ++p) out(p) = f.noise(b(p));
    return out;
}

}  // namespace

ClosedLoopRun simulate_closed_loop(const SlqProblem& p, const RiccatiSolution& ric, const BsdeSolution& bsde,
                                   const Vector& lambda, const BrownianEnsemble& ens, const SimulationOptions& opts)
{
    if (opts.training_seed && *opts.training_seed == ens.seed()) {
        throw Error(ErrorCode::SeedCollision, "montecarlo",
                    "verification seed " + std::to_string(ens.seed()) + " equals the training seed");
    }
    const TimeGrid& grid = p.grid;
    const int N = grid.N;
    const int l = p.l();
    const Eigen::Index n = p.n();
    const double dt = grid.dt();
    const SurrogatePath offset = combined_offset(bsde, lambda);

    std::vector<NodeData> nd(static_cast<std::size_t>(grid.nodes()));
    for (int k = 0; k <= N; ++k) {
        const double t = grid.time(k);
        NodeData& d = nd[static_cast<std::size_t>(k)];
        d.A = p.A(t);
        d.B = p.B(t);
        d.C = p.C(t);
        d.D = p.D(t);
        d.E = p.E(t);
        d.F = p.F(t);
        d.I = p.I(t);
        d.gain = ric.S_inv_L[static_cast<std::size_t>(k)];
        d.S_inv = ric.S_inv[static_cast<std::size_t>(k)];
        d.g = p.G.base_at(t);
        d.k = p.K.base_at(t);
        for (const Constraint& c : p.constraints) {
            d.alpha.push_back(c.alpha.base_at(t));
            d.beta.push_back(c.beta.base_at(t));
        }
    }

    ClosedLoopRun run;
    run.grid = grid;
    run.n_paths = ens.n_paths();
    run.seed = ens.seed();
    run.J_samples = Vector::Zero(run.n_paths);
    run.constraint_samples = Matrix::Zero(run.n_paths, l);
    const Eigen::Index keep = std::min(opts.keep_paths, run.n_paths);
    run.X_paths.assign(static_cast<std::size_t>(keep), Matrix(N + 1, n));
    run.u_paths.assign(static_cast<std::size_t>(keep), Matrix(N + 1, p.m()));
    run.B_paths.assign(static_cast<std::size_t>(keep), Vector(N + 1));

    for_each_chunk(run.n_paths, opts.exec, [&](Eigen::Index begin, Eigen::Index end) {
        const Eigen::Index rows = end - begin;
        Matrix X = Vector::Ones(rows) * p.xi.transpose();
        Vector running = Vector::Zero(rows), previous(rows);
        Matrix c_running = Matrix::Zero(rows, l), c_previous(rows, l);
        for (int k = 0; k <= N; ++k) {
            const NodeData& d = nd[static_cast<std::size_t>(k)];
            const double t = grid.time(k);
            const auto b = ens.node(k).segment(begin, rows);
            const Matrix v = offset.evaluate_node(k, b, Execution::Serial);
            const Matrix u = -(X * d.gain.transpose() + v * d.S_inv.transpose());

            Vector cost = ((X * d.E).cwiseProduct(X)).rowwise().sum() + 2.0 * ((X * d.F).cwiseProduct(u)).rowwise().sum() +
                          ((u * d.I).cwiseProduct(u)).rowwise().sum();
            if (!p.G.is_zero()) cost += 2.0 * (X * d.g).cwiseProduct(noise_values(p.G, b));
            if (!p.K.is_zero()) cost += 2.0 * (u * d.k).cwiseProduct(noise_values(p.K, b));
            Matrix con(rows, l);
            for (int i = 0; i < l; ++i) {
                const Constraint& c = p.constraints[static_cast<std::size_t>(i)];
                const auto is = static_cast<std::size_t>(i);
                con.col(i) = (X * d.alpha[is]).cwiseProduct(noise_values(c.alpha, b)) +
                             (u * d.beta[is]).cwiseProduct(noise_values(c.beta, b));
            }
            if (k > 0) {
                running += 0.5 * dt * (previous + cost);
                c_running += 0.5 * dt * (c_previous + con);
            }
            previous = cost;
            c_previous = con;

            for (Eigen::Index q = begin; q < std::min(end, keep); ++q) {
                const auto qs = static_cast<std::size_t>(q);
                run.X_paths[qs].row(k) = X.row(q - begin);
                run.u_paths[qs].row(k) = u.row(q - begin);
                run.B_paths[qs](k) = b(q - begin);
            }
            if (k == N) {
                Vector terminal = ((X * p.M).cwiseProduct(X)).rowwise().sum();
                if (!p.N.is_zero()) terminal += 2.0 * (X * p.N.base_at(t)).cwiseProduct(noise_values(p.N, b));
                running += terminal;
                for (int i = 0; i < l; ++i) {
                    const RandomField& gamma = p.constraints[static_cast<std::size_t>(i)].gamma;
                    if (!gamma.is_zero()) {
                        c_running.col(i) += (X * gamma.base_at(t)).cwiseProduct(noise_values(gamma, b));
                    }
                }
                break;
            }
            const Vector dB = ens.node(k + 1).segment(begin, rows) - b;
            const Matrix diffusion = X * d.C.transpose() + u * d.D.transpose();
            X += (X * d.A.transpose() + u * d.B.transpose()) * dt + dB.asDiagonal() * diffusion;
            if (!X.allFinite()) {
                throw Error(ErrorCode::NonFiniteState, "montecarlo", "state left the finite range at t=" +
                                                                         std::to_string(grid.time(k + 1)));
            }
        }
        run.J_samples.segment(begin, rows) = running;
        run.constraint_samples.middleRows(begin, rows) = c_running;
    });
    return run;
}

Estimate sample_estimate(const Eigen::Ref<const Vector>& samples)
{
    Estimate e;
    const auto n = static_cast<double>(samples.size());
    if (n == 0) return e;
    e.mean = samples.mean();
    if (n > 1) {
        const double var = (samples.array() - e.mean).square().sum() / (n - 1.0);
        e.se = std::sqrt(var / n);
    }
    return e;
}

Estimate estimate_cost(const ClosedLoopRun& run)
{
    return sample_estimate(run.J_samples);
}

const char* to_string(ConstraintStatus s)
{
    switch (s) {
    case ConstraintStatus::Active:
        return "active";
    case ConstraintStatus::Slack:
        return "slack";
    case ConstraintStatus::Violated:
        return "violated";
    }
    return "unknown";
}

std::vector<ConstraintEstimate> estimate_constraints(const ClosedLoopRun& run, const SlqProblem& p)
{
    std::vector<ConstraintEstimate> out;
    const double allowance = kAllowanceFactor * run.grid.dt();
    for (int i = 0; i < p.l(); ++i) {
        const Constraint& c = p.constraints[static_cast<std::size_t>(i)];
        ConstraintEstimate e;
        e.value = sample_estimate(run.constraint_samples.col(i));
        e.a = c.a;
        e.kind = c.kind;
        const double band = 3.0 * e.value.se + allowance;
        if (std::abs(e.value.mean - c.a) <= band) e.status = ConstraintStatus::Active;
        else if (c.kind == ConstraintKind::Inequality && e.value.mean < c.a) e.status = ConstraintStatus::Slack;
        else e.status = ConstraintStatus::Violated;
        out.push_back(e);
    }
    return out;
}

VerificationReport duality_gap(const ClosedLoopRun& run, const SlqProblem& p, const DualQuadratic& dq,
                               const DualSolution& sol, double dual_se)
{
    VerificationReport r;
    r.J = estimate_cost(run);
    r.constraints = estimate_constraints(run, p);
    r.dual_value = sol.value;
    r.dual_se = dual_se;
    r.gap = r.J.mean - r.dual_value;
    r.gap_se = std::sqrt(r.J.se * r.J.se + dual_se * dual_se);
    r.allowance = kAllowanceFactor * run.grid.dt();
    r.gap_ok = std::abs(r.gap) <= 3.0 * r.gap_se + r.allowance;
    r.feasible = true;
    r.complementary = true;
    for (std::size_t i = 0; i < r.constraints.size(); ++i) {
        const ConstraintEstimate& c = r.constraints[i];
        if (c.status == ConstraintStatus::Violated) r.feasible = false;
        const auto ii = static_cast<Eigen::Index>(i);
        if (static_cast<int>(i) < dq.l_prime && sol.lambda(ii) > 1e-6 && c.status != ConstraintStatus::Active) {
            r.complementary = false;
        }
    }
    return r;
}

void write_paths_csv(const ClosedLoopRun& run, std::ostream& os)
{
    if (run.X_paths.empty()) return;
    const Eigen::Index n = run.X_paths.front().cols();
    const Eigen::Index m = run.u_paths.front().cols();
    os << "path,t";
    for (Eigen::Index j = 0; j < n; ++j) os << ",X" << j + 1;
    for (Eigen::Index j = 0; j < m; ++j) os << ",u" << j + 1;
    os << ",B\n";
    os.precision(17);
    for (std::size_t q = 0; q < run.X_paths.size(); ++q) {
        for (int k = 0; k <= run.grid.N; ++k) {
            os << q << ',' << run.grid.time(k);
            for (Eigen::Index j = 0; j < n; ++j) os << ',' << run.X_paths[q](k, j);
            for (Eigen::Index j = 0; j < m; ++j) os << ',' << run.u_paths[q](k, j);
            os << ',' << run.B_paths[q](k) << '\n';
        }
    }
}

}  // namespace slq
