#pragma once

#include "slq/linalg.hpp"

#include <string>
#include <vector>

namespace slq {

/// Uniform grid s = t_0 < ... < t_N = T.
struct TimeGrid {
    double s = 0.0;
    double T = 1.0;
    int N = 1;

    static TimeGrid make(double s, double T, int N);

    double dt() const { return (T - s) / N; }
    double time(int k) const { return k == N ? T : s + k * dt(); }
    int nodes() const { return N + 1; }
};

enum class TimeFamily { Constant, Exponential, Rational };

/// Deterministic matrix-valued function of time: value·f(t) with f one of
/// 1, exp(k(T−t)) or 1/(c−t).
class MatrixFunction {
public:
    MatrixFunction() = default;

    static MatrixFunction constant(Matrix value);
    static MatrixFunction exponential(Matrix value, double k, double T);
    static MatrixFunction rational(Matrix value, double c);

    Matrix operator()(double t) const { return value_ * factor(t); }
    double factor(double t) const;

    const Matrix& value() const { return value_; }
    Eigen::Index rows() const { return value_.rows(); }
    Eigen::Index cols() const { return value_.cols(); }
    TimeFamily family() const { return family_; }
    bool is_constant() const { return family_ == TimeFamily::Constant; }
    bool is_zero() const { return value_.size() == 0 || value_.isZero(0.0); }

    /// m·F(t), same time family.
    MatrixFunction left_multiplied(const Matrix& m) const;
    MatrixFunction scaled(double c) const;

    std::string describe() const;

private:
    Matrix value_;
    TimeFamily family_ = TimeFamily::Constant;
    double k_ = 0.0;
    double horizon_ = 0.0;
    double c_ = 0.0;
};

/// Function sampled on every node of a grid.
struct MatrixPath {
    TimeGrid grid;
    std::vector<Matrix> values;

    static MatrixPath sample(const MatrixFunction& f, const TimeGrid& grid);
    const Matrix& operator[](int k) const { return values[static_cast<std::size_t>(k)]; }
};

}  // namespace slq
