#include "slq/random_field.hpp"

#include "slq/errors.hpp"

#include <cmath>

namespace slq {

RandomField::RandomField(MatrixFunction base, Expression expr, bool terminal)
    : base_(std::move(base)), expr_(std::move(expr)), terminal_(terminal)
{
    if (base_.cols() != 1) {
        throw Error(ErrorCode::DimensionMismatch, "model", "random field base must be a column vector");
    }
}

RandomField RandomField::zero(Eigen::Index dim, bool terminal)
{
    return RandomField(MatrixFunction::constant(Matrix::Zero(dim, 1)), Expression::constant(0.0), terminal);
}

RandomField RandomField::deterministic(const Vector& v, bool terminal)
{
    return RandomField(MatrixFunction::constant(Matrix(v)), Expression::constant(1.0), terminal);
}

void RandomField::declare_derivative(Expression d)
{
    const double probes_t[] = {0.0, 0.37, 1.0};
    const double probes_b[] = {-1.3, 0.0, 0.45, 2.1};
    for (double t : probes_t) {
        for (double b : probes_b) {
            const double want = expr_.derivative(t, b);
            const double got = d(t, b);
            if (!std::isfinite(want)) continue;
            if (std::abs(want - got) > 1e-10 * (1.0 + std::abs(want))) {
                throw Error(ErrorCode::InvalidConfig, "model",
                            "declared dB \"" + d.source() + "\" is not the B-derivative of \"" + expr_.source() + "\"");
            }
        }
    }
    declared_ = std::move(d);
}

Vector RandomField::derivative(double t, double b) const
{
    if (declared_) return base_(t) * (*declared_)(t, b);
    return base_at(t) * expr_.noise_derivative(b);
}

Vector RandomField::base_at(double t) const
{
    return base_(t) * expr_.time_factor(t);
}

double RandomField::noise_derivative(double b) const
{
    return expr_.noise_derivative(b);
}

RandomField RandomField::scaled(double c) const
{
    RandomField f = *this;
    f.expr_ = expr_.scaled(c);
    if (declared_) f.declared_ = declared_->scaled(c);
    return f;
}

RandomField RandomField::left_multiplied(const Matrix& m) const
{
    RandomField f = *this;
    f.base_ = base_.left_multiplied(m);
    return f;
}

std::string RandomField::describe() const
{
    return base_.describe() + " * " + expr_.canonical();
}

}  // namespace slq
