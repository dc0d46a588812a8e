#include "catch_amalgamated.hpp"
#include "support.hpp"

#include "fracp/error.hpp"
#include "fracp/expression.hpp"

#include <cmath>
#include <string>

using namespace fracp;
using fracp::testing::Gen;
using fracp::testing::simpson;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

bool parse_fails(const std::string& text) {
    try {
        Expression::parse(text);
    } catch (const Error& e) {
        return e.kind() == ErrorKind::ConfigParse;
    }
    return false;
}

// Three-point Gauss-Legendre on one panel; exact through degree 5.
template <class F>
double gauss3(const F& f, double a, double b) {
    const double m = 0.5 * (a + b);
    const double r = 0.5 * (b - a);
    const double x = std::sqrt(0.6);
    return r * (5.0 * f(m - r * x) + 8.0 * f(m) + 5.0 * f(m + r * x)) / 9.0;
}

} // namespace

TEST_CASE("whitelisted terms evaluate", "[expression]") {
    CHECK(Expression::parse("zero()").value(0.3) == 0.0);
    CHECK(Expression::parse("polynomial(1, -2, 3)").value(2.0) == 9.0);
    CHECK(Expression::parse("bump(0, 0.5)").value(0.0) == 1.0);
    CHECK(Expression::parse("bump(0, 0.5)").value(0.25) == 0.5625);
    CHECK(Expression::parse("bump(0, 0.5)").value(0.5) == 0.0);
    CHECK(Expression::parse("power_spike(1, 0.5)").value(1.25) == 2.0);
    CHECK(Expression::parse("indicator(-1, 0)").value(-0.5) == 1.0);
    CHECK(Expression::parse("indicator(-1, 0)").value(0.0) == 0.0);
    CHECK(Expression::parse("  2.5  ").value(7.0) == 2.5);
}

TEST_CASE("sums, signs and scales", "[expression]") {
    const Expression e = Expression::parse("2*bump(0, 0.5) - 0.5*indicator(-1, 0) + polynomial(0, 1)");
    REQUIRE(e.terms().size() == 3);
    CHECK(e.value(-0.25) == 2.0 * 0.5625 - 0.5 - 0.25);
    CHECK(Expression::parse("-bump(0, 1)").value(0.0) == -1.0);
    CHECK(Expression::parse("-3 * indicator(0, 1)").value(0.5) == -3.0);
    CHECK(e.text() == "2*bump(0, 0.5) - 0.5*indicator(-1, 0) + polynomial(0, 1)");
}

TEST_CASE("anything outside the grammar is a parse error", "[expression]") {
    for (const char* bad : {"", "   ", "sin(1)", "bump(0)", "bump(0, 0.5, 1)", "bump(0, -1)",
                            "power_spike(0, 1.5)", "power_spike(0, 0)", "indicator(1, 0)",
                            "zero(1)", "polynomial()", "bump(0, 0.5", "bump 0, 0.5)",
                            "2*", "2 bump(0, 1)", "bump(0, 1) *", "bump(0, 1) bump(0, 1)",
                            "bump(0, inf)", "bump(0, nan)", "bump(x, 1)", "system(\"ls\")"}) {
        INFO("'" << bad << "'");
        CHECK(parse_fails(bad));
    }
}

TEST_CASE("exact integrals match Gauss-Legendre on smooth terms", "[expression][property]") {
    Gen g(41);
    for (int n = 0; n < 200; ++n) {
        const double c = g.uniform(-1.0, 1.0);
        const double r = g.uniform(0.1, 1.5);
        const double a = g.uniform(-3.0, 2.0);
        const double b = a + g.uniform(0.01, 2.0);
        const std::string text = std::to_string(g.uniform(-2.0, 2.0)) + "*polynomial(" +
                                 std::to_string(g.uniform(-1.0, 1.0)) + ", " + std::to_string(g.uniform(-1.0, 1.0)) +
                                 ", " + std::to_string(g.uniform(-1.0, 1.0)) + ", 0.25)" + " + 3*bump(" +
                                 std::to_string(c) + ", " + std::to_string(r) + ")";
        const Expression e = Expression::parse(text);
        // Split at the bump support ends so every panel sees a polynomial of degree <= 4.
        double oracle = 0.0;
        double lo = a;
        for (double knot : {c - r, c + r, b}) {
            const double hi = std::min(std::max(knot, lo), b);
            if (hi > lo) oracle += gauss3([&](double x) { return e.value(x); }, lo, hi);
            lo = hi;
        }
        REQUIRE_THAT(e.cell_average(a, b) * (b - a), WithinAbs(oracle, 1e-12 * std::max(1.0, std::abs(oracle))));
    }
}

TEST_CASE("indicator integrals are overlap lengths", "[expression]") {
    const Expression e = Expression::parse("indicator(-1, 0)");
    CHECK(e.cell_average(-2.0, -1.0) == 0.0);
    CHECK(e.cell_average(-0.5, 0.5) == 0.5);
    CHECK(e.cell_average(-0.75, -0.25) == 1.0);
}

TEST_CASE("power spike averages are finite across the singularity", "[expression]") {
    const Expression e = Expression::parse("power_spike(0, 0.5)");
    // Symmetric cell of width h: 4 sqrt(h/2) / h.
    CHECK_THAT(e.cell_average(-0.125, 0.125), WithinRel(4.0 * std::sqrt(0.125) / 0.25, 1e-14));
    // Off the singularity the substitution y = v^2 makes the integrand smooth.
    const double oracle = simpson([](double v) { return 2.0 * v / v; }, std::sqrt(0.3), std::sqrt(0.7), 16);
    CHECK_THAT(e.cell_average(0.3, 0.7) * 0.4, WithinRel(oracle, 1e-13));
    CHECK_THAT(e.cell_average(-0.7, -0.3), WithinRel(e.cell_average(0.3, 0.7), 1e-15));
}

TEST_CASE("cell averages are additive and linear", "[expression][property]") {
    Gen g(42);
    const Expression e = Expression::parse("1.5*bump(0.2, 0.7) - power_spike(-0.3, 0.4) + indicator(-0.5, 0.9)");
    const Expression f = Expression::parse("bump(0.2, 0.7)");
    const Expression h = Expression::parse("power_spike(-0.3, 0.4)");
    const Expression k = Expression::parse("indicator(-0.5, 0.9)");
    for (int n = 0; n < 500; ++n) {
        const double a = g.uniform(-2.0, 1.0);
        const double m = a + g.uniform(0.01, 1.0);
        const double b = m + g.uniform(0.01, 1.0);
        const double whole = e.cell_average(a, b) * (b - a);
        const double parts = e.cell_average(a, m) * (m - a) + e.cell_average(m, b) * (b - m);
        REQUIRE_THAT(whole, WithinAbs(parts, 1e-12));
        const double lin = 1.5 * f.cell_average(a, b) - h.cell_average(a, b) + k.cell_average(a, b);
        REQUIRE_THAT(e.cell_average(a, b), WithinAbs(lin, 1e-12));
    }
    CHECK_THROWS_AS(e.cell_average(1.0, 1.0), Error);
}
