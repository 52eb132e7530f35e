#include "slq/expression.hpp"

#include "slq/errors.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <sstream>

namespace slq {

namespace {

double int_power(double x, int p)
{
    if (p == 0) return 1.0;
    if (p < 0) return 1.0 / int_power(x, -p);
    double r = 1.0;
    for (int i = 0; i < p; ++i) r *= x;
    return r;
}

}  // namespace

class ExpressionParser {
public:
    explicit ExpressionParser(std::string_view text) : text_(text) {}

    Expression run()
    {
        Expression e = term();
        while (peek() == '*') {
            ++pos_;
            e = e.times(term());
        }
        skip();
        if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
        e.source_ = std::string(text_);
        return e;
    }

private:
    [[noreturn]] void fail(const std::string& what) const
    {
        throw Error(ErrorCode::ParseError, "model",
                    "expression \"" + std::string(text_) + "\" column " + std::to_string(pos_ + 1) + ": " + what);
    }

    void skip()
    {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    char peek()
    {
        skip();
        return pos_ < text_.size() ? text_[pos_] : '\0';
    }

    void expect(char c)
    {
        if (peek() != c) fail(std::string("expected '") + c + "'");
        ++pos_;
    }

    bool starts_number()
    {
        const char c = peek();
        return std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+' || c == '.';
    }

    double number()
    {
        skip();
        std::size_t start = pos_;
        if (start < text_.size() && text_[start] == '+') ++start;
        double value = 0.0;
        const char* first = text_.data() + start;
        auto [ptr, ec] = std::from_chars(first, text_.data() + text_.size(), value);
        if (ec != std::errc() || ptr == first) fail("expected a number");
        if (!std::isfinite(value)) fail("number is not finite");
        pos_ = static_cast<std::size_t>(ptr - text_.data());
        return value;
    }

    int integer()
    {
        skip();
        std::size_t start = pos_;
        if (start < text_.size() && text_[start] == '+') ++start;
        int value = 0;
        const char* first = text_.data() + start;
        auto [ptr, ec] = std::from_chars(first, text_.data() + text_.size(), value);
        if (ec != std::errc() || ptr == first) fail("expected an integer exponent");
        pos_ = static_cast<std::size_t>(ptr - text_.data());
        return value;
    }

    bool keyword(std::string_view word)
    {
        skip();
        if (text_.substr(pos_, word.size()) != word) return false;
        const std::size_t after = pos_ + word.size();
        if (after < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[after])) || text_[after] == '_')) {
            return false;
        }
        pos_ = after;
        return true;
    }

    Expression term()
    {
        Expression e = Expression::constant(1.0);
        if (keyword("exp")) {
            expect('(');
            const double k1 = number();
            expect('*');
            if (keyword("B")) {
                e.b_rate_ = k1;
                if (peek() == '+') {
                    ++pos_;
                    e.t_rate_ = number();
                    expect('*');
                    if (!keyword("t")) fail("expected 't'");
                }
            } else if (keyword("t")) {
                e.t_rate_ = k1;
            } else {
                fail("expected 'B' or 't'");
            }
            expect(')');
            return e;
        }
        if (keyword("t")) {
            e.t_power_ = 1;
            if (peek() == '^') {
                ++pos_;
                e.t_power_ = integer();
            }
            return e;
        }
        if (keyword("B")) {
            e.b_power_ = 1;
            return e;
        }
        if (peek() == '(') {
            ++pos_;
            const double c = number();
            expect('-');
            if (!keyword("t")) fail("expected 't'");
            expect(')');
            expect('^');
            const int n = integer();
            if (n != 0) e.rational_.emplace_back(c, n);
            return e;
        }
        if (starts_number()) return Expression::constant(number());
        if (pos_ >= text_.size()) fail("unexpected end of expression");
        fail("unknown token '" + std::string(1, text_[pos_]) + "'");
    }

    std::string_view text_;
    std::size_t pos_ = 0;
};

Expression Expression::parse(std::string_view text)
{
    return ExpressionParser(text).run();
}

Expression Expression::constant(double c)
{
    Expression e;
    e.coef_ = c;
    std::ostringstream os;
    os.precision(17);
    os << c;
    e.source_ = os.str();
    return e;
}

double Expression::time_factor(double t) const
{
    double v = coef_ * int_power(t, t_power_);
    for (const auto& [c, n] : rational_) v *= int_power(c - t, n);
    if (t_rate_ != 0.0) v *= std::exp(t_rate_ * t);
    return v;
}

double Expression::noise_factor(double b) const
{
    double v = int_power(b, b_power_);
    if (b_rate_ != 0.0) v *= std::exp(b_rate_ * b);
    return v;
}

double Expression::noise_derivative(double b) const
{
    const double e = b_rate_ != 0.0 ? std::exp(b_rate_ * b) : 1.0;
    double poly = b_rate_ * int_power(b, b_power_);
    if (b_power_ != 0) poly += b_power_ * int_power(b, b_power_ - 1);
    return poly * e;
}

Expression Expression::scaled(double c) const
{
    Expression e = *this;
    e.coef_ *= c;
    return e;
}

Expression Expression::times(const Expression& other) const
{
    Expression e = *this;
    e.coef_ *= other.coef_;
    e.t_power_ += other.t_power_;
    e.b_power_ += other.b_power_;
    for (const auto& [c, n] : other.rational_) {
        bool merged = false;
        for (auto& [c0, n0] : e.rational_) {
            if (c0 == c) {
                n0 += n;
                merged = true;
                break;
            }
        }
        if (!merged) e.rational_.emplace_back(c, n);
    }
    std::erase_if(e.rational_, [](const auto& f) { return f.second == 0; });
    e.b_rate_ += other.b_rate_;
    e.t_rate_ += other.t_rate_;
    e.source_ = source_ + "*" + other.source_;
    return e;
}

std::string Expression::canonical() const
{
    std::ostringstream os;
    os.precision(17);
    os << coef_;
    if (t_power_ != 0) os << "*t^" << t_power_;
    if (b_power_ == 1) os << "*B";
    for (int i = 1; i < b_power_; ++i) os << "*B";
    for (const auto& [c, n] : rational_) os << "*(" << c << "-t)^" << n;
    if (b_rate_ != 0.0 && t_rate_ != 0.0) {
        os << "*exp(" << b_rate_ << "*B+" << t_rate_ << "*t)";
    } else if (b_rate_ != 0.0) {
        os << "*exp(" << b_rate_ << "*B)";
    } else if (t_rate_ != 0.0) {
        os << "*exp(" << t_rate_ << "*t)";
    }
    return os.str();
}

}  // namespace slq
