#include "slq/regression.hpp"

#include "slq/errors.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

namespace slq {

namespace {

std::string_view trim(std::string_view s)
{
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

[[noreturn]] void bad_term(std::string_view term)
{
    throw Error(ErrorCode::ParseError, "bsde", "unknown basis term '" + std::string(term) + "'");
}

Basis::Function parse_term(std::string_view term)
{
    Basis::Function f;
    f.label = std::string(term);
    if (term == "1") return f;
    if (term == "B") {
        f.power = 1;
        return f;
    }
    if (term.substr(0, 2) == "B^") {
        std::string_view digits = term.substr(2);
        int p = 0;
        auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), p);
        if (ec != std::errc() || ptr != digits.data() + digits.size() || p < 0 || p > 12) bad_term(term);
        f.power = p;
        return f;
    }
    if (term.substr(0, 4) == "exp(" && term.back() == ')') {
        std::string_view inner = trim(term.substr(4, term.size() - 5));
        if (inner.empty() || inner.back() != 'B') bad_term(term);
        inner.remove_suffix(1);
        inner = trim(inner);
        if (!inner.empty() && inner.back() == '*') {
            inner.remove_suffix(1);
            inner = trim(inner);
        }
        double rate = 1.0;
        if (inner == "-") {
            rate = -1.0;
        } else if (inner == "+" || inner.empty()) {
            rate = 1.0;
        } else {
            if (inner.front() == '+') inner.remove_prefix(1);
            auto [ptr, ec] = std::from_chars(inner.data(), inner.data() + inner.size(), rate);
            if (ec != std::errc() || ptr != inner.data() + inner.size()) bad_term(term);
        }
        if (rate == 0.0) bad_term(term);
        f.exponential = true;
        f.rate = rate;
        return f;
    }
    bad_term(term);
}

double int_power(double x, int p)
{
    double r = 1.0;
    for (int i = 0; i < p; ++i) r *= x;
    return r;
}

}  // namespace

double Basis::Function::value(double b) const
{
    return exponential ? std::exp(rate * b) : int_power(b, power);
}

double Basis::Function::derivative(double b) const
{
    if (exponential) return rate * std::exp(rate * b);
    return power == 0 ? 0.0 : power * int_power(b, power - 1);
}

Basis Basis::parse(std::string_view spec)
{
    Basis basis;
    std::size_t start = 0;
    while (start <= spec.size()) {
        const std::size_t comma = spec.find(',', start);
        const std::string_view term = trim(spec.substr(start, comma == std::string_view::npos ? spec.npos : comma - start));
        if (term.empty()) throw Error(ErrorCode::ParseError, "bsde", "empty basis term in '" + std::string(spec) + "'");
        Function f = parse_term(term);
        for (const Function& g : basis.functions_) {
            if (g.exponential == f.exponential && g.power == f.power && g.rate == f.rate) {
                throw Error(ErrorCode::InvalidConfig, "bsde", "duplicate basis term '" + f.label + "'");
            }
        }
        basis.functions_.push_back(std::move(f));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    if (basis.constant_index() < 0) {
        throw Error(ErrorCode::BasisTooSmall, "bsde", "basis must contain the constant function");
    }
    return basis;
}

Basis Basis::standard()
{
    return parse("1,B,B^2,exp(B),exp(-B)");
}

Basis Basis::constant_only()
{
    return parse("1");
}

Eigen::Index Basis::constant_index() const
{
    for (std::size_t j = 0; j < functions_.size(); ++j) {
        if (!functions_[j].exponential && functions_[j].power == 0) return static_cast<Eigen::Index>(j);
    }
    return -1;
}

std::string Basis::spec() const
{
    std::string out;
    for (std::size_t j = 0; j < functions_.size(); ++j) {
        if (j) out += ",";
        out += functions_[j].label;
    }
    return out;
}

void Basis::evaluate(double b, double* out) const
{
    for (std::size_t j = 0; j < functions_.size(); ++j) out[j] = functions_[j].value(b);
}

void Basis::derivative(double b, double* out) const
{
    for (std::size_t j = 0; j < functions_.size(); ++j) out[j] = functions_[j].derivative(b);
}

Matrix Basis::design(const Eigen::Ref<const Vector>& b, Execution exec) const
{
    Matrix phi(b.size(), size());
    for_each_chunk(b.size(), exec, [&](Eigen::Index begin, Eigen::Index end) {
        for (Eigen::Index j = 0; j < size(); ++j) {
            const Function& f = functions_[static_cast<std::size_t>(j)];
            for (Eigen::Index p = begin; p < end; ++p) phi(p, j) = f.value(b(p));
        }
    });
    return phi;
}

Matrix Basis::derivative_design(const Eigen::Ref<const Vector>& b, Execution exec) const
{
    Matrix phi(b.size(), size());
    for_each_chunk(b.size(), exec, [&](Eigen::Index begin, Eigen::Index end) {
        for (Eigen::Index j = 0; j < size(); ++j) {
            const Function& f = functions_[static_cast<std::size_t>(j)];
            for (Eigen::Index p = begin; p < end; ++p) phi(p, j) = f.derivative(b(p));
        }
    });
    return phi;
}

RegressionPlan::RegressionPlan(const Basis& basis, const Eigen::Ref<const Vector>& b, Execution exec, bool keep_design)
    : basis_(basis), exec_(exec), n_(b.size())
{
    init(basis.design(b, exec), keep_design);
}

RegressionPlan RegressionPlan::from_design(const Basis& basis, const Matrix& phi, Execution exec, bool keep_design)
{
    RegressionPlan plan;
    plan.basis_ = basis;
    plan.exec_ = exec;
    plan.n_ = phi.rows();
    plan.init(phi, keep_design);
    return plan;
}

void RegressionPlan::init(const Matrix& phi, bool keep_design)
{
    const Basis& basis = basis_;
    const Execution exec = exec_;
    if (basis.constant_index() < 0) {
        throw Error(ErrorCode::BasisTooSmall, "bsde", "basis must contain the constant function");
    }
    std::vector<Eigen::Index> candidates;
    for (Eigen::Index j = 0; j < basis.size(); ++j) {
        if (j != basis.constant_index()) candidates.push_back(j);
    }
    const auto nc = static_cast<Eigen::Index>(candidates.size());
    if (phi.cols() != basis.size()) throw Error(ErrorCode::DimensionMismatch, "bsde", "design has wrong width");
    const auto raw = [&](Eigen::Index c) { return phi.col(candidates[static_cast<std::size_t>(c)]); };

    // Two-pass centred moments.
    const Vector sum = reduce_chunks(n_, exec, Vector(Vector::Zero(nc)),
                                     [&](Eigen::Index begin, Eigen::Index end, Vector& acc) {
                                         for (Eigen::Index c = 0; c < nc; ++c) acc(c) += raw(c).segment(begin, end - begin).sum();
                                     });
    const Vector mean = sum / static_cast<double>(n_);
    const Vector sq = reduce_chunks(n_, exec, Vector(Vector::Zero(nc)),
                                    [&](Eigen::Index begin, Eigen::Index end, Vector& acc) {
                                        for (Eigen::Index c = 0; c < nc; ++c) {
                                            acc(c) += (raw(c).segment(begin, end - begin).array() - mean(c)).square().sum();
                                        }
                                    });
    std::vector<Eigen::Index> kept;
    for (Eigen::Index c = 0; c < nc; ++c) {
        const double sd = std::sqrt(sq(c) / static_cast<double>(n_));
        if (sd > 1e-12 * (1.0 + std::abs(mean(c)))) {
            kept.push_back(c);
        } else {
            ++dropped_;
        }
    }
    const auto nk = static_cast<Eigen::Index>(kept.size());
    mu_.resize(nk);
    sigma_.resize(nk);
    for (Eigen::Index i = 0; i < nk; ++i) {
        const Eigen::Index c = kept[static_cast<std::size_t>(i)];
        columns_.push_back(candidates[static_cast<std::size_t>(c)]);
        mu_(i) = mean(c);
        sigma_(i) = std::sqrt(sq(c) / static_cast<double>(n_));
    }

    design_.resize(n_, nk);
    for_each_chunk(n_, exec, [&](Eigen::Index begin, Eigen::Index end) {
        for (Eigen::Index i = 0; i < nk; ++i) {
            const Eigen::Index c = kept[static_cast<std::size_t>(i)];
            design_.col(i).segment(begin, end - begin) =
                (raw(c).segment(begin, end - begin).array() - mu_(i)) * (1.0 / sigma_(i));
        }
    });
    const Matrix gram = reduce_chunks(n_, exec, Matrix(Matrix::Zero(nk, nk)),
                                      [&](Eigen::Index begin, Eigen::Index end, Matrix& acc) {
                                          const auto block = design_.middleRows(begin, end - begin);
                                          acc.noalias() += block.transpose() * block;
                                      }) /
                        static_cast<double>(n_);
    corr_pinv_ = Matrix::Zero(nk, nk);
    if (nk > 0) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(gram));
        const Vector& ev = es.eigenvalues();
        const double top = ev.maxCoeff();
        Vector inv = Vector::Zero(nk);
        for (Eigen::Index i = 0; i < nk; ++i) {
            if (ev(i) > 1e-12 * top) {
                inv(i) = 1.0 / ev(i);
            } else {
                ++dropped_;
            }
        }
        condition_ = ev.minCoeff() > 0.0 ? top / ev.minCoeff() : std::numeric_limits<double>::infinity();
        corr_pinv_ = es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
    }
    if (!keep_design) design_.resize(0, 0);
}

void RegressionPlan::features(double b, double* out) const
{
    for (std::size_t i = 0; i < columns_.size(); ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        out[i] = (basis_[columns_[i]].value(b) - mu_(ii)) / sigma_(ii);
    }
}

Matrix RegressionPlan::coefficients(const Matrix& cross, const RowVector& mean) const
{
    const Eigen::Index d = mean.size();
    Matrix coef = Matrix::Zero(basis_.size(), d);
    RowVector intercept = mean;
    if (!columns_.empty()) {
        const Matrix beta = corr_pinv_ * cross;
        for (std::size_t i = 0; i < columns_.size(); ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            coef.row(columns_[i]) = beta.row(ii) / sigma_(ii);
            intercept -= beta.row(ii) * (mu_(ii) / sigma_(ii));
        }
    }
    coef.row(basis_.constant_index()) = intercept;
    return coef;
}

Matrix RegressionPlan::fit(const Eigen::Ref<const Matrix>& targets) const
{
    if (targets.rows() != n_) throw Error(ErrorCode::DimensionMismatch, "bsde", "regression target has wrong length");
    if (design_.rows() != n_) throw Error(ErrorCode::InvalidConfig, "bsde", "regression plan built without design");
    const Eigen::Index d = targets.cols();
    const Eigen::Index nk = feature_count();
    struct Moments {
        Matrix cross;
        RowVector sum;
        Moments& operator+=(const Moments& o)
        {
            cross += o.cross;
            sum += o.sum;
            return *this;
        }
    };
    const Moments zero{Matrix::Zero(nk, d), RowVector::Zero(d)};
    const Moments m = reduce_chunks(n_, exec_, zero, [&](Eigen::Index begin, Eigen::Index end, Moments& acc) {
        const Eigen::Index len = end - begin;
        acc.cross.noalias() += design_.middleRows(begin, len).transpose() * targets.middleRows(begin, len);
        acc.sum += targets.middleRows(begin, len).colwise().sum();
    });
    const double inv_n = 1.0 / static_cast<double>(n_);
    return coefficients(m.cross * inv_n, m.sum * inv_n);
}

RowVector RegressionPlan::r_squared(const Eigen::Ref<const Matrix>& targets, const Matrix& coef,
                                    const Eigen::Ref<const Vector>& b) const
{
    const Matrix fitted = basis_.design(b, exec_) * coef;
    const RowVector mean = targets.colwise().mean();
    RowVector out(targets.cols());
    for (Eigen::Index j = 0; j < targets.cols(); ++j) {
        const double total = (targets.col(j).array() - mean(j)).square().sum();
        const double resid = (targets.col(j) - fitted.col(j)).squaredNorm();
        const double scale = targets.col(j).squaredNorm();
        out(j) = total > 1e-24 * (1.0 + scale) ? 1.0 - resid / total : (resid <= 1e-20 * (1.0 + scale) ? 1.0 : 0.0);
    }
    return out;
}

SurrogatePath::SurrogatePath(const TimeGrid& grid, const Basis& basis, Eigen::Index dim)
    : grid_(grid), basis_(basis), dim_(dim), coef_(static_cast<std::size_t>(grid.nodes()), Matrix::Zero(basis.size(), dim))
{
}

void SurrogatePath::add_offset(const RandomField& f)
{
    if (f.dim() != dim_) throw Error(ErrorCode::DimensionMismatch, "bsde", "surrogate offset has wrong dimension");
    if (!f.is_zero()) offsets_.push_back(f);
}

Vector SurrogatePath::evaluate(int k, double b) const
{
    Vector phi(basis_.size());
    basis_.evaluate(b, phi.data());
    Vector v = coefficients(k).transpose() * phi;
    const double t = grid_.time(k);
    for (const RandomField& f : offsets_) v += f(t, b);
    return v;
}

Matrix SurrogatePath::evaluate_node(int k, const Eigen::Ref<const Vector>& b, Execution exec) const
{
    Matrix out(b.size(), dim_);
    const Matrix& coef = coefficients(k);
    const double t = grid_.time(k);
    std::vector<Vector> bases;
    for (const RandomField& f : offsets_) bases.push_back(f.base_at(t));
    for_each_chunk(b.size(), exec, [&](Eigen::Index begin, Eigen::Index end) {
        const Eigen::Index len = end - begin;
        const Matrix phi = basis_.design(b.segment(begin, len), Execution::Serial);
        out.middleRows(begin, len).noalias() = phi * coef;
        for (std::size_t i = 0; i < offsets_.size(); ++i) {
            for (Eigen::Index p = begin; p < end; ++p) {
                out.row(p) += offsets_[i].noise(b(p)) * bases[i].transpose();
            }
        }
    });
    return out;
}

SurrogatePath SurrogatePath::scaled(double c) const
{
    SurrogatePath s = *this;
    for (Matrix& m : s.coef_) m *= c;
    for (RandomField& f : s.offsets_) f = f.scaled(c);
    return s;
}

}  // namespace slq
