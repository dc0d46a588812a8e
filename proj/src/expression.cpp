#include "fracp/expression.hpp"

#include "fracp/error.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <sstream>

namespace fracp {

namespace {

[[noreturn]] void parse_error(std::string_view text, std::size_t pos, const std::string& what) {
    std::ostringstream os;
    os << "expression '" << text << "' at offset " << pos << ": " << what;
    fail(ErrorKind::ConfigParse, os.str());
}

class Parser {
public:
    explicit Parser(std::string_view text) : text_(text) {}

    std::vector<Term> parse() {
        std::vector<Term> terms;
        skip_ws();
        double sign = 1.0;
        if (peek('+') || peek('-')) sign = next() == '-' ? -1.0 : 1.0;
        terms.push_back(term(sign));
        for (;;) {
            skip_ws();
            if (pos_ == text_.size()) break;
            if (!(peek('+') || peek('-'))) parse_error(text_, pos_, "expected '+' or '-'");
            sign = next() == '-' ? -1.0 : 1.0;
            terms.push_back(term(sign));
        }
        return terms;
    }

private:
    std::string_view text_;
    std::size_t pos_ = 0;

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }
    bool peek(char c) {
        skip_ws();
        return pos_ < text_.size() && text_[pos_] == c;
    }
    char next() {
        skip_ws();
        return text_[pos_++];
    }
    void expect(char c) {
        if (!peek(c)) parse_error(text_, pos_, std::string("expected '") + c + "'");
        ++pos_;
    }

    bool at_number() {
        skip_ws();
        if (pos_ >= text_.size()) return false;
        const char c = text_[pos_];
        return std::isdigit(static_cast<unsigned char>(c)) || c == '.' || c == '-' || c == '+';
    }

    double number() {
        skip_ws();
        const std::string rest(text_.substr(pos_));
        char* end = nullptr;
        const double v = std::strtod(rest.c_str(), &end);
        if (end == rest.c_str()) parse_error(text_, pos_, "expected a number");
        if (!std::isfinite(v)) parse_error(text_, pos_, "non-finite number");
        pos_ += static_cast<std::size_t>(end - rest.c_str());
        return v;
    }

    std::string ident() {
        skip_ws();
        const std::size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
            ++pos_;
        if (start == pos_) parse_error(text_, pos_, "expected a function name");
        return std::string(text_.substr(start, pos_ - start));
    }

    Term term(double sign) {
        skip_ws();
        double scale = sign;
        if (pos_ < text_.size() &&
            (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.')) {
            scale *= number();
            if (!peek('*')) {
                Term t;
                t.kind = Term::Kind::Polynomial;
                t.args = {scale};
                return t;
            }
            expect('*');
        }
        const std::size_t at = pos_;
        const std::string name = ident();
        expect('(');
        std::vector<double> args;
        if (!peek(')')) {
            args.push_back(number());
            while (peek(',')) {
                ++pos_;
                args.push_back(number());
            }
        }
        expect(')');
        return make(name, std::move(args), scale, at);
    }

    Term make(const std::string& name, std::vector<double> args, double scale, std::size_t at) {
        Term t;
        t.scale = scale;
        t.args = std::move(args);
        auto arity = [&](std::size_t n) {
            if (t.args.size() != n) {
                parse_error(text_, at, name + " takes " + std::to_string(n) + " arguments");
            }
        };
        if (name == "polynomial") {
            t.kind = Term::Kind::Polynomial;
            if (t.args.empty()) parse_error(text_, at, "polynomial needs coefficients");
        } else if (name == "bump") {
            t.kind = Term::Kind::Bump;
            arity(2);
            if (!(t.args[1] > 0.0)) parse_error(text_, at, "bump radius must be positive");
        } else if (name == "power_spike") {
            t.kind = Term::Kind::PowerSpike;
            arity(2);
            if (!(t.args[1] > 0.0 && t.args[1] < 1.0))
                parse_error(text_, at, "power_spike exponent must lie in (0, 1)");
        } else if (name == "indicator") {
            t.kind = Term::Kind::Indicator;
            arity(2);
            if (!(t.args[0] < t.args[1])) parse_error(text_, at, "indicator needs lo < hi");
        } else if (name == "zero") {
            t.kind = Term::Kind::Zero;
            arity(0);
        } else {
            parse_error(text_, at, "'" + name + "' is not a whitelisted function");
        }
        return t;
    }
};

// Antiderivative of (1 - z^2)^2.
double bump_primitive(double z) {
    const double z2 = z * z;
    return z * (1.0 - 2.0 * z2 / 3.0 + z2 * z2 / 5.0);
}

// Antiderivative of |y|^{-a}.
double spike_primitive(double y, double a) {
    if (y == 0.0) return 0.0;
    return std::copysign(std::pow(std::abs(y), 1.0 - a) / (1.0 - a), y);
}

} // namespace

double Term::value(double x) const {
    switch (kind) {
    case Kind::Polynomial: {
        double v = 0.0;
        for (auto it = args.rbegin(); it != args.rend(); ++it) v = v * x + *it;
        return scale * v;
    }
    case Kind::Bump: {
        const double z = (x - args[0]) / args[1];
        if (std::abs(z) >= 1.0) return 0.0;
        const double w = 1.0 - z * z;
        return scale * w * w;
    }
    case Kind::PowerSpike: {
        const double y = std::abs(x - args[0]);
        if (y == 0.0) return std::copysign(HUGE_VAL, scale);
        return scale * std::pow(y, -args[1]);
    }
    case Kind::Indicator:
        return x > args[0] && x < args[1] ? scale : 0.0;
    case Kind::Zero:
        return 0.0;
    }
    return 0.0;
}

double Term::integral(double a, double b) const {
    switch (kind) {
    case Kind::Polynomial: {
        double fa = 0.0;
        double fb = 0.0;
        for (std::size_t k = args.size(); k-- > 0;) {
            fa = fa * a + args[k] / static_cast<double>(k + 1);
            fb = fb * b + args[k] / static_cast<double>(k + 1);
        }
        return scale * (fb * b - fa * a);
    }
    case Kind::Bump: {
        const double r = args[1];
        const double za = std::clamp((a - args[0]) / r, -1.0, 1.0);
        const double zb = std::clamp((b - args[0]) / r, -1.0, 1.0);
        return scale * r * (bump_primitive(zb) - bump_primitive(za));
    }
    case Kind::PowerSpike:
        return scale * (spike_primitive(b - args[0], args[1]) - spike_primitive(a - args[0], args[1]));
    case Kind::Indicator: {
        const double lo = std::max(a, args[0]);
        const double hi = std::min(b, args[1]);
        return hi > lo ? scale * (hi - lo) : 0.0;
    }
    case Kind::Zero:
        return 0.0;
    }
    return 0.0;
}

Expression Expression::parse(std::string_view text) {
    Expression e;
    e.text_ = std::string(text);
    e.terms_ = Parser(text).parse();
    return e;
}

double Expression::value(double x) const {
    double v = 0.0;
    for (const auto& t : terms_) v += t.value(x);
    return v;
}

double Expression::cell_average(double a, double b) const {
    require(a < b, ErrorKind::InvalidParameter, "cell must satisfy a < b");
    double v = 0.0;
    for (const auto& t : terms_) v += t.integral(a, b);
    return v / (b - a);
}

} // namespace fracp
