#include "slq/grid.hpp"

#include "slq/errors.hpp"

#include <cmath>
#include <sstream>

namespace slq {

TimeGrid TimeGrid::make(double s, double T, int N)
{
    if (!(std::isfinite(s) && std::isfinite(T)) || !(T > s) || s < 0.0) {
        throw Error(ErrorCode::InvalidConfig, "model", "time grid requires T > s >= 0");
    }
    if (N < 1) throw Error(ErrorCode::InvalidConfig, "model", "time grid requires N >= 1");
    return TimeGrid{s, T, N};
}

MatrixFunction MatrixFunction::constant(Matrix value)
{
    MatrixFunction f;
    f.value_ = std::move(value);
    return f;
}

MatrixFunction MatrixFunction::exponential(Matrix value, double k, double T)
{
    MatrixFunction f;
    f.value_ = std::move(value);
    f.family_ = TimeFamily::Exponential;
    f.k_ = k;
    f.horizon_ = T;
    return f;
}

MatrixFunction MatrixFunction::rational(Matrix value, double c)
{
    MatrixFunction f;
    f.value_ = std::move(value);
    f.family_ = TimeFamily::Rational;
    f.c_ = c;
    return f;
}

double MatrixFunction::factor(double t) const
{
    switch (family_) {
    case TimeFamily::Constant: return 1.0;
    case TimeFamily::Exponential: return std::exp(k_ * (horizon_ - t));
    case TimeFamily::Rational: return 1.0 / (c_ - t);
    }
    return 1.0;
}

MatrixFunction MatrixFunction::left_multiplied(const Matrix& m) const
{
    MatrixFunction f = *this;
    f.value_ = m * value_;
    return f;
}

MatrixFunction MatrixFunction::scaled(double c) const
{
    MatrixFunction f = *this;
    f.value_ *= c;
    return f;
}

std::string MatrixFunction::describe() const
{
    std::ostringstream os;
    switch (family_) {
    case TimeFamily::Constant: os << "constant"; break;
    case TimeFamily::Exponential: os << "exp(" << k_ << "*(" << horizon_ << "-t))"; break;
    case TimeFamily::Rational: os << "1/(" << c_ << "-t)"; break;
    }
    os << " " << value_.rows() << "x" << value_.cols();
    return os.str();
}

MatrixPath MatrixPath::sample(const MatrixFunction& f, const TimeGrid& grid)
{
    MatrixPath path;
    path.grid = grid;
    path.values.reserve(static_cast<std::size_t>(grid.nodes()));
    for (int k = 0; k <= grid.N; ++k) {
        Matrix v = f(grid.time(k));
        if (!v.allFinite()) {
            throw Error(ErrorCode::InvalidConfig, "model", "coefficient is not finite at t=" + std::to_string(grid.time(k)));
        }
        path.values.push_back(std::move(v));
    }
    return path;
}

}  // namespace slq
