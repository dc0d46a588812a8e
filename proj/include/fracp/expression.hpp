#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace fracp {

/// One whitelisted building block of a data expression.
///   polynomial(c0, c1, ...)       sum c_k x^k
///   bump(center, radius)          (1 - ((x-center)/radius)^2)^2 on |x-center| < radius
///   power_spike(center, a)        |x-center|^{-a}, 0 < a < 1
///   indicator(lo, hi)             1 on (lo, hi)
///   zero()
struct Term {
    enum class Kind { Polynomial, Bump, PowerSpike, Indicator, Zero };
    Kind kind = Kind::Zero;
    double scale = 1.0;
    std::vector<double> args;

    double value(double x) const;
    /// Exact integral over [a, b].
    double integral(double a, double b) const;
};

/// Sum of scaled terms, e.g. "2*bump(0, 0.5) - 0.5*indicator(-1, 0)".
class Expression {
public:
    Expression() = default;

    /// Throws ConfigParse on anything outside the whitelist grammar.
    static Expression parse(std::string_view text);

    double value(double x) const;
    double cell_average(double a, double b) const;
    const std::string& text() const noexcept { return text_; }
    const std::vector<Term>& terms() const noexcept { return terms_; }

private:
    std::string text_;
    std::vector<Term> terms_;
};

} // namespace fracp
