#pragma once

#include "slq/expression.hpp"
#include "slq/grid.hpp"

#include <optional>

namespace slq {

/// Vector quantity base(t)·expr(t, B_t). Terminal fields are 𝓕_T data evaluated at t = T.
class RandomField {
public:
    RandomField() = default;
    RandomField(MatrixFunction base, Expression expr, bool terminal = false);

    static RandomField zero(Eigen::Index dim, bool terminal = false);
    static RandomField deterministic(const Vector& v, bool terminal = false);

    /// Declares the symbolic ∂/∂B. Throws InvalidConfig if it disagrees with the
    /// derivative implied by the canonical form of expr.
    void declare_derivative(Expression d);
    const std::optional<Expression>& declared_derivative() const { return declared_; }

    Vector operator()(double t, double b) const { return base_at(t) * expr_.noise_factor(b); }
    Vector derivative(double t, double b) const;

    /// base(t)·time_factor(t): the deterministic vector multiplying noise(b).
    Vector base_at(double t) const;
    double noise(double b) const { return expr_.noise_factor(b); }
    double noise_derivative(double b) const;

    Eigen::Index dim() const { return base_.rows(); }
    bool is_zero() const { return base_.is_zero() || expr_.is_zero(); }
    bool is_deterministic() const { return is_zero() || !expr_.depends_on_B(); }
    bool terminal() const { return terminal_; }

    const MatrixFunction& base() const { return base_; }
    const Expression& expr() const { return expr_; }

    RandomField scaled(double c) const;
    RandomField left_multiplied(const Matrix& m) const;

    std::string describe() const;

private:
    MatrixFunction base_;
    Expression expr_ = Expression::constant(1.0);
    std::optional<Expression> declared_;
    bool terminal_ = false;
};

}  // namespace slq
