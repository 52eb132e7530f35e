#include "slq/problem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace slq {

Constraint Constraint::scaled(double c) const
{
    Constraint out = *this;
    out.alpha = alpha.scaled(c);
    out.beta = beta.scaled(c);
    out.gamma = gamma.scaled(c);
    out.a = a * c;
    return out;
}

int SlqProblem::l_prime() const
{
    return static_cast<int>(std::count_if(constraints.begin(), constraints.end(),
                                          [](const Constraint& c) { return c.kind == ConstraintKind::Inequality; }));
}

void SlqProblem::normalize_constraints()
{
    std::stable_partition(constraints.begin(), constraints.end(),
                          [](const Constraint& c) { return c.kind == ConstraintKind::Inequality; });
}

Vector SlqProblem::budgets() const
{
    Vector a(l());
    for (int i = 0; i < l(); ++i) a(i) = constraints[static_cast<std::size_t>(i)].a;
    return a;
}

void SlqProblem::set_budgets(const Vector& a)
{
    if (a.size() != l()) throw Error(ErrorCode::DimensionMismatch, "model", "budget vector has wrong length");
    for (int i = 0; i < l(); ++i) constraints[static_cast<std::size_t>(i)].a = a(i);
}

SlqProblem SlqProblem::with_steps(int steps) const
{
    SlqProblem p = *this;
    p.grid = TimeGrid::make(grid.s, grid.T, steps);
    return p;
}

bool ValidationReport::ok() const
{
    return std::all_of(checks.begin(), checks.end(), [](const ValidationCheck& c) { return c.passed; });
}

void ValidationReport::throw_if_failed() const
{
    for (const auto& c : checks) {
        if (!c.passed) throw Error(c.code, "model", c.name + ": " + c.detail);
    }
}

std::string ValidationReport::summary() const
{
    std::ostringstream os;
    for (const auto& c : checks) {
        os << (c.passed ? "pass " : "FAIL ") << c.name << " (witness " << c.witness << ")";
        if (!c.detail.empty()) os << " " << c.detail;
        os << "\n";
    }
    return os.str();
}

namespace {

void require_shape(const std::string& name, Eigen::Index rows, Eigen::Index cols, Eigen::Index want_rows,
                   Eigen::Index want_cols)
{
    if (rows != want_rows || cols != want_cols) {
        std::ostringstream os;
        os << name << " is " << rows << "x" << cols << ", expected " << want_rows << "x" << want_cols;
        throw Error(ErrorCode::DimensionMismatch, "model", os.str());
    }
}

void require_field(const std::string& name, const RandomField& f, Eigen::Index dim)
{
    require_shape(name, f.dim(), 1, dim, 1);
}

double scale_of(const Matrix& m)
{
    return 1.0 + (m.size() ? m.cwiseAbs().maxCoeff() : 0.0);
}

}  // namespace

ValidationReport validate_problem(const SlqProblem& p)
{
    const Eigen::Index n = p.n();
    const Eigen::Index m = p.m();
    if (n < 1 || m < 1) throw Error(ErrorCode::DimensionMismatch, "model", "state and control dimensions must be >= 1");
    require_shape("A", p.A.rows(), p.A.cols(), n, n);
    require_shape("B", p.B.rows(), p.B.cols(), n, m);
    require_shape("C", p.C.rows(), p.C.cols(), n, n);
    require_shape("D", p.D.rows(), p.D.cols(), n, m);
    require_shape("E", p.E.rows(), p.E.cols(), n, n);
    require_shape("F", p.F.rows(), p.F.cols(), n, m);
    require_shape("I", p.I.rows(), p.I.cols(), m, m);
    require_shape("M", p.M.rows(), p.M.cols(), n, n);
    require_field("G", p.G, n);
    require_field("K", p.K, m);
    require_field("N", p.N, n);
    for (const auto& c : p.constraints) {
        require_field(c.name + ".alpha", c.alpha, n);
        require_field(c.name + ".beta", c.beta, m);
        require_field(c.name + ".gamma", c.gamma, n);
    }

    ValidationReport report;
    ValidationCheck dims{"dimensions", true, 0.0, "", ErrorCode::DimensionMismatch};
    report.checks.push_back(dims);

    ValidationCheck order{"constraint ordering", true, 0.0, "", ErrorCode::InvalidConfig};
    int transitions = 0;
    for (std::size_t i = 1; i < p.constraints.size(); ++i) {
        if (p.constraints[i].kind != p.constraints[i - 1].kind) ++transitions;
        if (p.constraints[i].kind == ConstraintKind::Inequality &&
            p.constraints[i - 1].kind == ConstraintKind::Equality) {
            order.passed = false;
        }
    }
    order.witness = transitions;
    if (!order.passed) order.detail = "equality constraint precedes an inequality";
    report.checks.push_back(order);

    ValidationCheck sym{"symmetry of E, I, M", true, 0.0, "", ErrorCode::NonSymmetric};
    ValidationCheck e_psd{"E positive semidefinite", true, std::numeric_limits<double>::infinity(), "",
                          ErrorCode::NotPositiveDefinite};
    ValidationCheck m_psd{"M positive semidefinite", true, 0.0, "", ErrorCode::NotPositiveDefinite};
    ValidationCheck i_pd{"I positive definite", true, std::numeric_limits<double>::infinity(), "",
                         ErrorCode::NotPositiveDefinite};
    ValidationCheck schur{"Schur complement E - F I^-1 F^T", true, std::numeric_limits<double>::infinity(), "",
                          ErrorCode::NotPositiveDefinite};

    auto check_sym = [&](const std::string& name, const Matrix& w, double t) {
        const double asym = asymmetry(w);
        sym.witness = std::max(sym.witness, asym);
        if (asym > 1e-12 * scale_of(w) && sym.passed) {
            sym.passed = false;
            std::ostringstream os;
            os << name << " asymmetric by " << asym << " at t=" << t;
            sym.detail = os.str();
        }
    };

    check_sym("M", p.M, p.grid.T);
    m_psd.witness = min_eigenvalue(symmetrize(p.M));
    if (m_psd.witness < -1e-12 * scale_of(p.M)) {
        m_psd.passed = false;
        m_psd.detail = "M has a negative eigenvalue";
    }

    for (int k = 0; k <= p.grid.N; ++k) {
        const double t = p.grid.time(k);
        const Matrix E = p.E(t);
        const Matrix I = p.I(t);
        const Matrix F = p.F(t);
        if (!E.allFinite() || !I.allFinite() || !F.allFinite()) {
            throw Error(ErrorCode::InvalidConfig, "model", "cost weights not finite at t=" + std::to_string(t));
        }
        check_sym("E", E, t);
        check_sym("I", I, t);

        const double e_min = min_eigenvalue(symmetrize(E));
        if (e_min < e_psd.witness) e_psd.witness = e_min;
        if (e_min < -1e-12 * scale_of(E) && e_psd.passed) {
            e_psd.passed = false;
            e_psd.detail = "E has eigenvalue " + std::to_string(e_min) + " at t=" + std::to_string(t);
        }

        const double i_min = min_eigenvalue(symmetrize(I));
        if (i_min < i_pd.witness) i_pd.witness = i_min;
        if (i_min < kMinControlWeight && i_pd.passed) {
            i_pd.passed = false;
            i_pd.detail = "I has eigenvalue " + std::to_string(i_min) + " at t=" + std::to_string(t);
        }

        if (i_min >= kMinControlWeight) {
            const Matrix s = symmetrize(E - F * symmetric_inverse(symmetrize(I)).inverse * F.transpose());
            const double s_min = min_eigenvalue(s);
            if (s_min < schur.witness) schur.witness = s_min;
            if (s_min < -1e-10 * scale_of(E) && schur.passed) {
                schur.passed = false;
                schur.detail = "eigenvalue " + std::to_string(s_min) + " at t=" + std::to_string(t);
            }
        }
    }
    report.checks.push_back(sym);
    report.checks.push_back(e_psd);
    report.checks.push_back(m_psd);
    report.checks.push_back(i_pd);
    report.checks.push_back(schur);
    return report;
}

const HermiteRule& hermite_rule()
{
    static const HermiteRule rule = [] {
        constexpr int n = 80;
        Matrix J = Matrix::Zero(n, n);
        for (int k = 1; k < n; ++k) {
            J(k, k - 1) = std::sqrt(static_cast<double>(k));
            J(k - 1, k) = J(k, k - 1);
        }
        Eigen::SelfAdjointEigenSolver<Matrix> es(J);
        HermiteRule r;
        r.nodes = es.eigenvalues();
        r.weights = es.eigenvectors().row(0).transpose().array().square();
        r.weights /= r.weights.sum();
        return r;
    }();
    return rule;
}

namespace {

double double_factorial(int k)
{
    double r = 1.0;
    for (int i = k; i > 1; i -= 2) r *= i;
    return r;
}

}  // namespace

double gaussian_expectation(double variance, const std::function<double(double)>& f)
{
    if (variance <= 0.0) return f(0.0);
    const HermiteRule& rule = hermite_rule();
    const double sd = std::sqrt(variance);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < rule.nodes.size(); ++i) acc += rule.weights(i) * f(sd * rule.nodes(i));
    return acc;
}

std::vector<Constraint> build_variance_constraints(Eigen::Index n, Eigen::Index m, const TimeGrid& grid, int count,
                                                   double a0, std::uint64_t seed)
{
    if (!(a0 > 0.0) || !std::isfinite(a0)) {
        throw Error(ErrorCode::NonPositiveBudget, "model", "variance budget must be positive");
    }
    if (count < 1 || n < 1) throw Error(ErrorCode::InvalidConfig, "model", "need at least one constraint and state");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    const double T = grid.T;
    std::vector<Constraint> out;
    for (int j = 1; j <= count; ++j) {
        const int power = 2 * j - 1;
        // Var(B_T^{2j-1}) = E[B_T^{4j-2}] = (4j-3)!! T^{2j-1}
        const double var = double_factorial(4 * j - 3) * std::pow(T, power);
        const double c = std::sqrt(a0 / var);
        Vector e = Vector::Zero(n);
        if (n == 1) {
            e(0) = 1.0;
        } else {
            do {
                for (Eigen::Index i = 0; i < n; ++i) e(i) = normal(rng);
            } while (e.norm() < 1e-8);
            e.normalize();
        }
        Expression expr = Expression::constant(c);
        for (int q = 0; q < power; ++q) expr = expr.times(Expression::parse("B"));
        Constraint con;
        con.alpha = RandomField::zero(n);
        con.beta = RandomField::zero(m);
        con.gamma = RandomField(MatrixFunction::constant(Matrix(e)), expr, true);
        con.a = a0;
        con.kind = ConstraintKind::Inequality;
        con.name = "variance" + std::to_string(j);
        out.push_back(std::move(con));
    }
    return out;
}

double anchor_energy(const QuadraticWeights& w, const Anchor& anchor, const TimeGrid& grid)
{
    auto field_energy = [](const RandomField& f, const Matrix& W, double t) {
        if (f.is_zero()) return 0.0;
        const Vector v = f.base_at(t);
        const double quad = v.dot(W * v);
        const double second = gaussian_expectation(t, [&](double b) {
            const double z = f.noise(b);
            return z * z;
        });
        return quad * second;
    };
    const int intervals = 2 * std::max(grid.N, 500);
    const double h = (grid.T - grid.s) / intervals;
    double running = 0.0;
    for (int i = 0; i <= intervals; ++i) {
        const double t = (i == intervals) ? grid.T : grid.s + i * h;
        const double weight = (i == 0 || i == intervals) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        running += weight * (field_energy(anchor.alpha, w.E, t) + field_energy(anchor.beta, w.I, t));
    }
    return running * h / 3.0 + field_energy(anchor.gamma, w.M, grid.T);
}

std::vector<Constraint> build_quadratic_constraints(const QuadraticWeights& w, const std::vector<Anchor>& anchors,
                                                    double a0, const TimeGrid& grid)
{
    if (!(a0 > 0.0) || !std::isfinite(a0)) {
        throw Error(ErrorCode::NonPositiveBudget, "model", "quadratic budget must be positive");
    }
    std::vector<Constraint> out;
    int index = 0;
    for (const Anchor& anchor : anchors) {
        ++index;
        const double theta = anchor_energy(w, anchor, grid);
        if (!(theta > 0.0)) {
            throw Error(ErrorCode::ZeroAnchor, "model", "anchor " + std::to_string(index) + " has zero energy");
        }
        double scale = std::sqrt(a0 / theta);
        if (std::abs(scale - 1.0) <= 1e-12) scale = 1.0;
        Constraint con;
        con.alpha = anchor.alpha.left_multiplied(w.E).scaled(scale);
        con.beta = anchor.beta.left_multiplied(w.I).scaled(scale);
        con.gamma = anchor.gamma.left_multiplied(w.M).scaled(scale);
        con.a = a0;
        con.kind = ConstraintKind::Inequality;
        con.name = "quadratic" + std::to_string(index);
        out.push_back(std::move(con));
    }
    return out;
}

}  // namespace slq
