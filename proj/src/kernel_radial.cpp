#include "fracp/kernel_radial.hpp"

#include "fracp/error.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace fracp {

namespace {

using boost::math::quadrature::gauss_kronrod;
using boost::math::quadrature::tanh_sinh;

constexpr double kRelTol = 1e-10;
constexpr double kPi = std::numbers::pi;

// Graded mesh density toward xi = 0 when sigma is close to 1.
constexpr int kPanelsPerDecade = 40;

[[noreturn]] void quadrature_failed(const char* what, double achieved) {
    std::ostringstream os;
    os << what << ": achieved relative error " << achieved;
    fail(ErrorKind::QuadratureFailure, os.str());
}

// Adaptive Gauss-Kronrod by bisection. Each panel is mapped onto [-1, 1] before the
// fixed rule is applied so the returned error estimate is in the units of the integral.
template <unsigned Points, class F>
double gk_adaptive(const F& f, double a, double b, int depth, double tol, double& err) {
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    auto g = [&](double t) { return half * f(mid + half * t); };
    double e = 0.0;
    double v = gauss_kronrod<double, Points>::integrate(g, -1.0, 1.0, 0, 0.0, &e);
    if (depth > 0 && e > tol * std::abs(v)) {
        double e1 = 0.0;
        double e2 = 0.0;
        v = gk_adaptive<Points>(f, a, mid, depth - 1, tol, e1) + gk_adaptive<Points>(f, mid, b, depth - 1, tol, e2);
        e = e1 + e2;
    }
    err = e;
    return v;
}

// d = 1 - sigma is carried separately so it keeps full relative precision near sigma = 1.
struct AngularIntegrand {
    int N;
    double sigma;
    double d;
    double alpha;

    double operator()(double xi) const {
        const double sh = std::sin(0.5 * xi);
        // 1 - 2 sigma cos(xi) + sigma^2 without cancellation near sigma = 1.
        const double q = d * d + 4.0 * sigma * sh * sh;
        const double w = N == 2 ? 1.0 : std::pow(std::sin(xi), N - 2);
        return w * std::pow(q, -alpha);
    }
};

double angular_integral(double sigma, double d, const AngularKernelSpec& spec) {
    const AngularIntegrand f{spec.N, sigma, d, spec.exponent()};
    const double eps = std::abs(d);

    if (eps == 0.0) {
        // Integrand ~ xi^{theta-2} at the origin.
        if (spec.theta <= 1.0) return std::numeric_limits<double>::infinity();
        // Abscissae where q underflows carry no measurable mass.
        auto g = [&](double xi) {
            const double v = f(xi);
            return std::isinf(v) ? 0.0 : v;
        };
        tanh_sinh<double> ts;
        double err = 0.0;
        const double v = ts.integrate(g, 0.0, kPi, 1e-12, &err);
        if (!(err <= kRelTol * std::abs(v))) quadrature_failed("angular kernel at sigma=1", err / v);
        return v;
    }

    if (eps >= 0.5) {
        double err = 0.0;
        const double v = gk_adaptive<61>(f, 0.0, kPi, 15, 1e-13, err);
        if (!(err <= kRelTol * std::abs(v))) quadrature_failed("angular kernel", err / v);
        return v;
    }

    const double ratio = std::pow(10.0, 1.0 / kPanelsPerDecade);
    double a = 0.0;
    double b = std::min(kPi, 1e-2 * eps);
    double total = 0.0;
    double total_err = 0.0;
    while (a < kPi) {
        double err = 0.0;
        total += gk_adaptive<31>(f, a, b, 3, 1e-13, err);
        total_err += err;
        a = b;
        b = std::min(kPi, b * ratio);
    }
    if (!(total_err <= kRelTol * std::abs(total))) {
        quadrature_failed("angular kernel near sigma=1", total_err / total);
    }
    return total;
}

double finite_moment(const AngularKernelSpec& spec, double a, double lo, double hi);

// Integral over [1 - r, 1] (side = -1) or [1, 1 + r] (side = +1) in v = |1 - sigma|^c,
// c = min(theta, 1), which cancels the |1 - sigma|^{theta - 1} singularity.
double near_one_moment(const AngularKernelSpec& spec, double a, double r, int side) {
    const int N = spec.N;
    const double c = std::min(spec.theta, 1.0);
    const double scale = sphere_measure(N - 2);
    auto g = [&](double v) {
        const double dist = std::pow(v, 1.0 / c);
        const double sigma = 1.0 + side * dist;
        const double k = scale * angular_integral(sigma, -side * dist, spec);
        return std::pow(sigma, N - 1 - a) * k * std::pow(v, 1.0 / c - 1.0) / c;
    };
    double err = 0.0;
    const double v = gk_adaptive<31>(g, 0.0, std::pow(r, c), 30, 1e-12, err);
    if (!(err <= 1e-9 * std::abs(v) + 1e-300)) quadrature_failed("kernel moment near sigma=1", err / v);
    return v;
}

double finite_moment(const AngularKernelSpec& spec, double a, double lo, double hi) {
    if (hi <= lo) return 0.0;
    const int N = spec.N;
    const bool singular_origin = N - 1 - a < 0.0 && lo == 0.0;
    if (hi == 1.0 && singular_origin) return finite_moment(spec, a, 0.0, 0.5) + finite_moment(spec, a, 0.5, 1.0);
    if (hi == 1.0) return near_one_moment(spec, a, 1.0 - lo, -1);
    if (lo == 1.0) return near_one_moment(spec, a, hi - 1.0, +1);
    auto g = [&](double s) {
        if (s == 0.0) return N - 1 - a == 0.0 ? angular_kernel(0.0, spec) : 0.0;
        return std::pow(s, N - 1 - a) * angular_kernel(s, spec);
    };
    double err = 0.0;
    double v = 0.0;
    if (singular_origin) {
        tanh_sinh<double> ts;
        v = ts.integrate(g, lo, hi, 1e-11, &err);
    } else {
        v = gk_adaptive<31>(g, lo, hi, 25, 1e-12, err);
    }
    if (!(err <= 1e-9 * std::abs(v) + 1e-300)) quadrature_failed("kernel moment", err / v);
    return v;
}

// Integral over [L, inf) via sigma = 1/tau and z = tau^{a-theta}.
double tail_moment(const AngularKernelSpec& spec, double a, double L) {
    const double c = a - spec.theta;
    const double zmax = std::pow(L, -c);
    auto g = [&](double z) {
        const double tau = z <= 0.0 ? 0.0 : std::pow(z, 1.0 / c);
        return angular_kernel(tau, spec);
    };
    double err = 0.0;
    const double v = gk_adaptive<31>(g, 0.0, zmax, 25, 1e-12, err);
    if (!(err <= 1e-9 * std::abs(v) + 1e-300)) quadrature_failed("kernel tail moment", err / v);
    return v / c;
}

} // namespace

void AngularKernelSpec::validate() const {
    require(N >= 2, ErrorKind::InvalidParameter, "kernel dimension N must be >= 2");
    require(std::isfinite(theta) && N - theta > 0.0, ErrorKind::InvalidParameter,
            "kernel requires N - theta > 0");
}

double sphere_measure(int d) {
    require(d >= 0, ErrorKind::InvalidParameter, "sphere dimension must be >= 0");
    const double k = 0.5 * (d + 1);
    return 2.0 * std::pow(kPi, k) / std::tgamma(k);
}

double angular_kernel(double sigma, const AngularKernelSpec& spec) {
    spec.validate();
    require(sigma >= 0.0 && std::isfinite(sigma), ErrorKind::InvalidParameter,
            "angular kernel requires sigma >= 0");
    return sphere_measure(spec.N - 2) * angular_integral(sigma, 1.0 - sigma, spec);
}

double kernel_moment(const AngularKernelSpec& spec, double a, double lower, double upper) {
    spec.validate();
    require(std::isfinite(a), ErrorKind::InvalidParameter, "moment exponent must be finite");
    require(lower >= 0.0 && std::isfinite(lower) && !(upper < lower), ErrorKind::InvalidParameter,
            "moment interval must satisfy 0 <= lower <= upper");
    if (upper == lower) return 0.0;
    const bool infinite = std::isinf(upper);
    require(!infinite || a > spec.theta, ErrorKind::InvalidParameter,
            "moment diverges at infinity unless a > theta");
    require(!(spec.N - a <= 0.0 && lower == 0.0), ErrorKind::InvalidParameter,
            "moment diverges at the origin unless a < N");
    const bool covers_one = lower <= 1.0 && upper >= 1.0;
    require(!covers_one || spec.theta > 0.0, ErrorKind::InvalidParameter,
            "moment diverges at sigma = 1 unless theta > 0");

    const double split = infinite ? std::max(lower, 2.0) : upper;
    double total = 0.0;
    if (covers_one && split > 1.0) {
        total += finite_moment(spec, a, lower, 1.0);
        total += finite_moment(spec, a, 1.0, split);
    } else {
        total += finite_moment(spec, a, lower, split);
    }
    if (infinite) total += tail_moment(spec, a, split);
    return total;
}

} // namespace fracp
