#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace slq {

class ExpressionParser;

/// Scalar product expression in t and the Brownian value B:
///
///   expr := term | term "*" expr
///   term := number | "t" | "B" | "exp(" lin ")" | "(" number "-" "t" ")" "^" int | "t" "^" int
///   lin  := number "*" "B" ["+" number "*" "t"] | number "*" "t"
///
/// Every expression is kept in the canonical form
///   c · t^p · B^q · Π (c_j − t)^{n_j} · exp(k_B·B + k_t·t),
/// which factors into a time part and a noise part.
class Expression {
public:
    Expression() = default;

    /// Throws Error(ParseError) with the 1-based column of the offending token.
    static Expression parse(std::string_view text);
    static Expression constant(double c);

    double operator()(double t, double b) const { return time_factor(t) * noise_factor(b); }
    double time_factor(double t) const;
    double noise_factor(double b) const;
    /// ∂/∂B of noise_factor.
    double noise_derivative(double b) const;
    double derivative(double t, double b) const { return time_factor(t) * noise_derivative(b); }

    bool depends_on_B() const { return b_power_ != 0 || b_rate_ != 0.0; }
    bool is_zero() const { return coef_ == 0.0; }
    double coefficient() const { return coef_; }
    int b_power() const { return b_power_; }
    double b_rate() const { return b_rate_; }

    Expression scaled(double c) const;
    Expression times(const Expression& other) const;

    const std::string& source() const { return source_; }
    std::string canonical() const;

private:
    friend class ExpressionParser;

    double coef_ = 1.0;
    int t_power_ = 0;
    int b_power_ = 0;
    std::vector<std::pair<double, int>> rational_;
    double b_rate_ = 0.0;
    double t_rate_ = 0.0;
    std::string source_ = "1";
};

}  // namespace slq
