#include "fracp/algebra.hpp"

#include "fracp/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace fracp {

namespace {

// Relative slack for inequalities that must hold with constant exactly 1.
constexpr double kRoundoff = 1e-12;

// One minus t^e for t in (0, 1], accurate as t -> 1.
double one_minus_pow(double t, double e) {
    return -std::expm1(e * std::log(t));
}

double gamma_exponent(double p, double alpha) { return (p + alpha - 1.0) / p; }

// Both ratios are homogeneous of degree 0 and symmetric in (a, b), so they
// only depend on t = min/max.
double alge3_ratio_t(double t, double p, double alpha) {
    if (t >= 1.0) {
        const double g = gamma_exponent(p, alpha);
        return alpha / std::pow(g, p);
    }
    if (t <= 0.0) return 1.0;
    const double g = gamma_exponent(p, alpha);
    const double lhs = std::pow(1.0 - t, p - 1.0) * one_minus_pow(t, alpha);
    const double rhs = std::pow(one_minus_pow(t, g), p);
    return lhs / rhs;
}

double alge2_ratio_t(double t, double p, double alpha) {
    if (t >= 1.0) {
        const double g = gamma_exponent(p, alpha);
        return std::pow(2.0, alpha - 1.0) / std::pow(g, p);
    }
    if (t <= 0.0) return 1.0;
    const double g = gamma_exponent(p, alpha);
    const double lhs = std::pow(1.0 + t, alpha - 1.0) * std::pow(1.0 - t, p);
    const double rhs = std::pow(one_minus_pow(t, g), p);
    return lhs / rhs;
}

// Extremum of ratio(exp(-u)) over u in (0, inf) by log-spaced scan followed
// by golden-section refinement. sign = +1 for minimum, -1 for maximum.
template <typename Ratio>
double scan_extremum(Ratio ratio, double sign) {
    auto f = [&](double log_u) { return sign * ratio(std::exp(-std::exp(log_u))); };
    const double lo = std::log(1e-9);
    const double hi = std::log(60.0);
    constexpr int n = 20000;
    double best = std::min(sign * ratio(1.0), sign * ratio(0.0));
    int best_i = -1;
    for (int i = 0; i <= n; ++i) {
        const double x = lo + (hi - lo) * i / n;
        const double v = f(x);
        if (v < best) {
            best = v;
            best_i = i;
        }
    }
    if (best_i >= 0) {
        const double step = (hi - lo) / n;
        double a = lo + (best_i - 1) * step;
        double b = lo + (best_i + 1) * step;
        const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
        double c = b - phi * (b - a);
        double d = a + phi * (b - a);
        double fc = f(c);
        double fd = f(d);
        for (int it = 0; it < 200 && (b - a) > 1e-14; ++it) {
            if (fc < fd) {
                b = d;
                d = c;
                fd = fc;
                c = b - phi * (b - a);
                fc = f(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + phi * (b - a);
                fd = f(d);
            }
        }
        best = std::min({best, fc, fd});
    }
    return sign * best;
}

void validate(double p, double alpha) {
    require(std::isfinite(p) && p >= 1.0, ErrorKind::InvalidParameter, "p must be >= 1");
    require(std::isfinite(alpha) && alpha > 0.0, ErrorKind::InvalidParameter,
            "alpha must be > 0");
}

} // namespace

TruncationLevel::TruncationLevel(double k) : k_(k) {
    require(std::isfinite(k) && k > 0.0, ErrorKind::InvalidParameter,
            "truncation level must be positive");
}

double truncate(double sigma, TruncationLevel k) noexcept {
    const double kv = k.value();
    return std::clamp(sigma, -kv, kv);
}

double remainder(double sigma, TruncationLevel k) noexcept {
    return sigma - truncate(sigma, k);
}

double primitive_theta(double sigma, TruncationLevel k) noexcept {
    const double kv = k.value();
    const double a = std::abs(sigma);
    if (a <= kv) return 0.5 * sigma * sigma;
    return kv * a - 0.5 * kv * kv;
}

double signed_power(double sigma, double p) noexcept {
    if (sigma == 0.0) return 0.0;
    return std::copysign(std::pow(std::abs(sigma), p - 1.0), sigma);
}

double alge3_ratio(double a, double b, double p, double alpha) noexcept {
    if (a == b) return 1.0;
    const double hi = std::max(a, b);
    const double lo = std::min(a, b);
    return alge3_ratio_t(lo / hi, p, alpha);
}

double alge2_ratio(double a, double b, double p, double alpha) noexcept {
    if (a == b) return 1.0;
    const double hi = std::max(a, b);
    const double lo = std::min(a, b);
    return alge2_ratio_t(lo / hi, p, alpha);
}

double published_c1(double alpha) noexcept {
    return std::max(1.0, std::pow(2.0, alpha - 1.0));
}

double published_c3(double p, double alpha) {
    validate(p, alpha);
    const double m = scan_extremum([&](double t) { return alge3_ratio_t(t, p, alpha); }, 1.0);
    return m * (1.0 - 1e-9);
}

double published_c4(double p, double alpha) {
    validate(p, alpha);
    const double m = scan_extremum([&](double t) { return alge2_ratio_t(t, p, alpha); }, -1.0);
    return m * (1.0 + 1e-9);
}

InequalityReport check_inequalities(double p, double alpha, std::uint64_t samples,
                                    std::uint64_t seed) {
    validate(p, alpha);
    require(samples >= 1, ErrorKind::InvalidParameter, "samples must be >= 1");

    InequalityReport rep;
    rep.p = p;
    rep.alpha = alpha;
    rep.samples = samples;
    rep.seed = seed;
    rep.published_c1 = published_c1(alpha);
    rep.published_c3 = published_c3(p, alpha);
    rep.published_c4 = published_c4(p, alpha);
    rep.alge2_checked = alpha >= 1.0;

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> log_mag(std::log(1e-6), std::log(1e6));
    std::uniform_real_distribution<double> log_k(std::log(1e-3), std::log(1e3));
    std::bernoulli_distribution coin(0.5);

    double min3 = std::numeric_limits<double>::infinity();
    double max2 = 0.0;
    const double c1 = rep.published_c1;

    for (std::uint64_t i = 0; i < samples; ++i) {
        const double a = std::exp(log_mag(rng));
        const double b = std::exp(log_mag(rng));

        const double lhs1 = std::pow(a + b, alpha);
        const double rhs1 = c1 * std::pow(a, alpha) + c1 * std::pow(b, alpha);
        if (lhs1 > rhs1 * (1.0 + kRoundoff)) ++rep.violations_alge1;

        const double r3 = alge3_ratio(a, b, p, alpha);
        min3 = std::min(min3, r3);
        if (!(r3 >= rep.published_c3)) ++rep.violations_alge3;

        const double r2 = alge2_ratio(a, b, p, alpha);
        max2 = std::max(max2, r2);
        if (rep.alge2_checked && !(r2 <= rep.published_c4)) ++rep.violations_alge2;

        // Signed pair and level for the truncation inequalities.
        const double sa = coin(rng) ? a : -a;
        const double sb = coin(rng) ? b : -b;
        const TruncationLevel k(std::exp(log_k(rng)));
        const double d = sa - sb;
        const double flux = signed_power(d, p);

        const double dt = truncate(sa, k) - truncate(sb, k);
        const double lhs_t = flux * dt;
        const double rhs_t = std::pow(std::abs(dt), p);
        if (lhs_t < rhs_t * (1.0 - kRoundoff)) ++rep.violations_truncation;

        const double dg = remainder(sa, k) - remainder(sb, k);
        const double lhs_g = flux * dg;
        const double rhs_g = std::pow(std::abs(dg), p);
        if (lhs_g < rhs_g * (1.0 - kRoundoff) - std::abs(d) * 1e-15 * std::abs(flux))
            ++rep.violations_remainder;
    }

    rep.empirical_c3 = min3;
    rep.empirical_c4 = max2;
    rep.worst_ratio_alge3 = min3 / rep.published_c3;
    rep.worst_ratio_alge2 = max2 / rep.published_c4;
    rep.violations = rep.violations_alge1 + rep.violations_alge3 + rep.violations_alge2 +
                     rep.violations_truncation + rep.violations_remainder;
    return rep;
}

} // namespace fracp
