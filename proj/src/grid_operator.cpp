#include "fracp/grid_operator.hpp"

#include "fracp/error.hpp"

#include <boost/math/special_functions/zeta.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace fracp {

GridDomain::GridDomain(double x_left, double x_right, int M)
    : x_left_(x_left), x_right_(x_right), M_(M), h_(0.0) {
    require(std::isfinite(x_left) && std::isfinite(x_right), ErrorKind::InvalidParameter,
            "domain endpoints must be finite");
    require(x_left < x_right, ErrorKind::InvalidParameter, "domain requires x_left < x_right");
    require(M >= 2, ErrorKind::InvalidParameter, "grid needs at least 2 nodes");
    h_ = (x_right - x_left) / M;
}

Eigen::VectorXd GridDomain::nodes() const {
    Eigen::VectorXd x(M_);
    for (int i = 0; i < M_; ++i) x[i] = node(i);
    return x;
}

FracParams::FracParams(double p, double s, int N) : p_(p), s_(s), N_(N), p_star_(0.0) {
    require(std::isfinite(p) && p > 1.0, ErrorKind::InvalidParameter, "p must exceed 1");
    require(std::isfinite(s) && s > 0.0 && s < 1.0, ErrorKind::InvalidParameter,
            "s must lie in (0, 1)");
    require(N >= 1, ErrorKind::InvalidParameter, "dimension must be >= 1");
    p_star_ = p * s < N ? p * N / (N - p * s) : HUGE_VAL;
}

double flux(double sigma, double p, double eps) noexcept {
    if (p == 2.0) return sigma;
    if (eps == 0.0) {
        if (sigma == 0.0) return 0.0;
        return std::copysign(std::pow(std::abs(sigma), p - 1.0), sigma);
    }
    return std::pow(sigma * sigma + eps * eps, 0.5 * (p - 2.0)) * sigma;
}

double flux_derivative(double sigma, double p, double eps) noexcept {
    if (p == 2.0) return 1.0;
    const double a2 = sigma * sigma + eps * eps;
    if (a2 == 0.0) return 0.0;
    return std::pow(a2, 0.5 * (p - 2.0)) * ((p - 1.0) * sigma * sigma + eps * eps) / a2;
}

void check_shape(const Eigen::VectorXd& v, const GridDomain& grid) {
    if (v.size() != grid.size()) {
        std::ostringstream os;
        os << "field has " << v.size() << " entries, grid has " << grid.size();
        fail(ErrorKind::ShapeMismatch, os.str());
    }
}

KernelTable build_kernel_table(const GridDomain& grid, const FracParams& params) {
    require(params.N() == 1, ErrorKind::InvalidParameter,
            "the interval operator requires N = 1");
    const int M = grid.size();
    const double h = grid.h();
    const double ps = params.ps();
    KernelTable t{grid, params, Eigen::MatrixXd::Zero(M, M), Eigen::VectorXd(M)};
    const double a = params.p() * (1.0 - params.s()) - 1.0;
    t.singular_cell = std::max(0.0, -boost::math::zeta(-a)) * std::pow(h, -ps);
    for (int i = 0; i < M; ++i) {
        for (int j = i + 1; j < M; ++j) {
            // |x_i - x_j| = (j - i) h exactly on a uniform grid.
            const double w = h / std::pow((j - i) * h, 1.0 + ps);
            t.weights(i, j) = w;
            t.weights(j, i) = w;
        }
        const double dl = (i + 0.5) * h;
        const double dr = (M - i - 0.5) * h;
        t.tail[i] = (std::pow(dl, -ps) + std::pow(dr, -ps)) / ps;
    }
    t.coupling = t.weights;
    for (int i = 0; i + 1 < M; ++i) {
        t.coupling(i, i + 1) += t.singular_cell;
        t.coupling(i + 1, i) += t.singular_cell;
    }
    return t;
}

Eigen::VectorXd apply_operator(const Eigen::VectorXd& u, const KernelTable& table, double eps) {
    check_shape(u, table.grid);
    const int M = table.grid.size();
    const double p = table.params.p();
    Eigen::VectorXd out = Eigen::VectorXd::Zero(M);
    for (int i = 0; i < M; ++i) {
        for (int j = i + 1; j < M; ++j) {
            const double f = flux(u[i] - u[j], p, eps) * table.coupling(i, j);
            out[i] += f;
            out[j] -= f;
        }
        out[i] += flux(u[i], p, eps) * table.tail[i];
    }
    return out;
}

Field apply_operator(const Field& u, const KernelTable& table, double eps) {
    return Field{apply_operator(u.values, table, eps), u.time};
}

double energy_pairing(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                      const KernelTable& table) {
    check_shape(u, table.grid);
    check_shape(v, table.grid);
    const int M = table.grid.size();
    const double p = table.params.p();
    const double h = table.grid.h();
    double inner = 0.0;
    double ext = 0.0;
    for (int i = 0; i < M; ++i) {
        // Each unordered pair once, which absorbs the factor 1/2.
        for (int j = i + 1; j < M; ++j) {
            inner += flux(u[i] - u[j], p) * (v[i] - v[j]) * table.coupling(i, j);
        }
        ext += flux(u[i], p) * v[i] * table.tail[i];
    }
    return (inner + ext) * h;
}

double energy_pairing(const Field& u, const Field& v, const KernelTable& table) {
    return energy_pairing(u.values, v.values, table);
}

double gagliardo_seminorm(const Eigen::VectorXd& u, const GridDomain& grid, double s1, double q) {
    require(std::isfinite(s1) && s1 > 0.0 && s1 < 1.0, ErrorKind::InvalidParameter,
            "s1 must lie in (0, 1)");
    require(std::isfinite(q) && q > 0.0, ErrorKind::InvalidParameter, "q must be positive");
    check_shape(u, grid);
    const int M = grid.size();
    const double h = grid.h();
    double sum = 0.0;
    for (int i = 0; i < M; ++i) {
        for (int j = i + 1; j < M; ++j) {
            const double d = std::abs(u[i] - u[j]);
            if (d == 0.0) continue;
            sum += std::pow(d, q) / std::pow((j - i) * h, 1.0 + q * s1);
        }
    }
    // Ordered pairs count twice.
    return std::pow(2.0 * sum * h * h, 1.0 / q);
}

double gagliardo_seminorm(const Field& u, const GridDomain& grid, double s1, double q) {
    return gagliardo_seminorm(u.values, grid, s1, q);
}

} // namespace fracp
