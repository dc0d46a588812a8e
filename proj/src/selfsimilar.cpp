#include "fracp/selfsimilar.hpp"

#include "fracp/error.hpp"
#include "fracp/grid_operator.hpp"
#include "fracp/kernel_radial.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace fracp {

namespace {

double phi(double d, double p) { return flux(d, p); }
double dphi(double d, double p) { return flux_derivative(d, p); }

// Fitted tail exponent with its derivatives in U_{n-1} and U_{n-6} (zero when clamped).
struct TailFit {
    double gamma;
    double d_last = 0.0;
    double d_first = 0.0;
};

TailFit fit_tail(const Eigen::VectorXd& r, const Eigen::VectorXd& U, const SelfSimilarParams& params) {
    const auto n = r.size();
    TailFit t{tail_exponent(r, U, params)};
    const double lo = params.N + 0.1;
    const double hi = 4.0 * (params.N + params.ps());
    if (t.gamma > lo && t.gamma < hi && U[n - 1] > 0.0 && U[n - 6] > 0.0) {
        const double L = std::log(r[n - 1]) - std::log(r[n - 6]);
        t.d_last = -1.0 / (L * U[n - 1]);
        t.d_first = 1.0 / (L * U[n - 6]);
    }
    return t;
}

// A = r^{-ps} I[U] and optionally dA/dU, including the dependence of the tail fit.
void assemble(const RadialOperator& op, const Eigen::VectorXd& r, const Eigen::VectorXd& U,
              Eigen::VectorXd& A, Eigen::MatrixXd* J) {
    const int n = op.n;
    const int E = op.extension;
    const double p = op.params.p;
    const double ps = op.params.ps();
    const TailFit fit = fit_tail(r, U, op.params);
    const double decay = std::pow(op.ratio, -fit.gamma);

    // Virtual tail values U_{n-1} ratio^{-gamma m}, m = 1..E.
    Eigen::VectorXd tail(E);
    Eigen::VectorXd tail_factor(E);
    double f = 1.0;
    for (int m = 0; m < E; ++m) {
        f *= decay;
        tail_factor[m] = f;
        tail[m] = U[n - 1] * f;
    }

    A.setZero(n);
    if (J) J->setZero(n, n);
    for (int i = 0; i < n; ++i) {
        const double ui = U[i];
        double I = 0.0;
        double diag = 0.0;
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            const double w = op.weight(j - i);
            const double d = ui - U[j];
            I += phi(d, p) * w;
            if (J) {
                const double g = dphi(d, p) * w;
                diag += g;
                (*J)(i, j) -= g;
            }
        }
        double tail_col = 0.0;
        double d_gamma = 0.0;
        for (int m = 0; m < E; ++m) {
            const double w = op.weight(n + m - i);
            const double d = ui - tail[m];
            I += phi(d, p) * w;
            if (J) {
                const double g = dphi(d, p) * w;
                diag += g;
                tail_col -= g * tail_factor[m];
                d_gamma += g * tail[m] * (m + 1) * op.delta;
            }
        }
        const double dl = ui - U[0];
        I += phi(dl, p) * op.low[i] + phi(ui, p) * op.high[i];
        const double scale = std::pow(r[i], -ps);
        A[i] = scale * I;
        if (J) {
            const double gl = dphi(dl, p) * op.low[i];
            diag += gl + dphi(ui, p) * op.high[i];
            (*J)(i, 0) -= gl;
            (*J)(i, n - 1) += tail_col + d_gamma * fit.d_last;
            (*J)(i, n - 6) += d_gamma * fit.d_first;
            (*J)(i, i) += diag;
            J->row(i) *= scale;
        }
    }
}

// beta (N U + r U') with ghosts U_{-1} = U_0 and U_n = U_{n-1} ratio^{-gamma}.
void drift(const RadialOperator& op, const Eigen::VectorXd& r, const Eigen::VectorXd& U,
           Eigen::VectorXd& D, Eigen::MatrixXd* J) {
    const int n = op.n;
    const double beta = op.params.beta();
    const int N = op.params.N;
    const TailFit fit = fit_tail(r, U, op.params);
    const double ghost = std::pow(op.ratio, -fit.gamma);
    // r_i / (r_{i+1} - r_{i-1}) on a geometric grid.
    const double c = 1.0 / (op.ratio - 1.0 / op.ratio);
    D.resize(n);
    for (int i = 0; i < n; ++i) {
        const double up = i + 1 < n ? U[i + 1] : U[n - 1] * ghost;
        const double um = i > 0 ? U[i - 1] : U[0];
        D[i] = beta * (N * U[i] + c * (up - um));
        if (J) {
            (*J)(i, i) += beta * N;
            if (i + 1 < n) {
                (*J)(i, i + 1) += beta * c;
            } else {
                const double d_gamma = -beta * c * U[n - 1] * ghost * op.delta;
                (*J)(i, i) += beta * c * ghost + d_gamma * fit.d_last;
                (*J)(i, n - 6) += d_gamma * fit.d_first;
            }
            if (i > 0) {
                (*J)(i, i - 1) -= beta * c;
            } else {
                (*J)(i, i) -= beta * c;
            }
        }
    }
}

void check_grid(const RadialOperator& op, const Eigen::VectorXd& r, const Eigen::VectorXd& U) {
    require(r.size() == op.n && U.size() == op.n, ErrorKind::ShapeMismatch,
            "profile length does not match the radial operator");
}

double interior_relative(const Eigen::VectorXd& F, const Eigen::VectorXd& U, double betaN) {
    const int n = static_cast<int>(F.size());
    double m = 0.0;
    for (int i = 2; i < n - 2; ++i) m = std::max(m, std::abs(F[i]));
    return m / (betaN * U.cwiseAbs().maxCoeff());
}

bool nonincreasing(const Eigen::VectorXd& U) {
    for (Eigen::Index i = 1; i < U.size(); ++i) {
        if (U[i] > U[i - 1]) return false;
    }
    return true;
}

} // namespace

void SelfSimilarParams::validate() const {
    require(std::isfinite(p) && p > 2.0, ErrorKind::InvalidParameter, "self-similar profile needs p > 2");
    require(std::isfinite(s) && s > 0.0 && s < 1.0, ErrorKind::InvalidParameter, "s must lie in (0, 1)");
    require(N >= 2, ErrorKind::InvalidParameter, "radial problem needs N >= 2");
    require(ps() < N, ErrorKind::InvalidParameter, "requires p*s < N");
}

RadialOperator build_radial_operator(const SelfSimilarParams& params, const RadialGridSpec& grid) {
    params.validate();
    require(grid.r_min > 0.0 && grid.r_max > grid.r_min && grid.ratio > 1.0 && grid.tail_reach > 1.0,
            ErrorKind::InvalidParameter, "invalid radial grid");
    RadialOperator op;
    op.params = params;
    op.ratio = grid.ratio;
    op.delta = std::log(grid.ratio);
    op.n = static_cast<int>(std::lround(std::log(grid.r_max / grid.r_min) / op.delta)) + 1;
    op.extension = static_cast<int>(std::ceil(std::log(grid.tail_reach) / op.delta));
    require(op.n >= 8, ErrorKind::InvalidParameter, "radial grid needs at least 8 nodes");

    const int n = op.n;
    const int E = op.extension;
    const double d = op.delta;
    const AngularKernelSpec ks{params.N, -params.ps()};

    op.cell = Eigen::VectorXd::Zero(2 * n - 1 + E);
    for (int k = -(n - 1); k <= n - 1 + E; ++k) {
        if (k == 0) continue;
        op.cell[k + n - 1] = kernel_moment(ks, 0.0, std::exp((k - 0.5) * d), std::exp((k + 0.5) * d));
    }

    op.low.resize(n);
    op.low[n - 1] = kernel_moment(ks, 0.0, 0.0, std::exp(-(n - 0.5) * d));
    for (int i = n - 2; i >= 0; --i) op.low[i] = op.low[i + 1] + op.weight(-(i + 1));

    // high_i integrates beyond ratio^{j + 1/2}, j = n - 1 + E - i.
    op.high.resize(n);
    op.high[0] = kernel_moment(ks, 0.0, std::exp((n - 0.5 + E) * d), HUGE_VAL);
    for (int i = 1; i < n; ++i) op.high[i] = op.high[i - 1] + op.weight(n - 1 + E - i + 1);
    return op;
}

Eigen::VectorXd radial_grid(const RadialOperator& op, double r_min) {
    Eigen::VectorXd r(op.n);
    for (int i = 0; i < op.n; ++i) r[i] = r_min * std::pow(op.ratio, i);
    return r;
}

double tail_exponent(const Eigen::VectorXd& r, const Eigen::VectorXd& U, const SelfSimilarParams& params) {
    const auto n = r.size();
    require(n >= 6 && U.size() == n, ErrorKind::ShapeMismatch, "tail fit needs 6 nodes");
    const double lo = params.N + 0.1;
    const double hi = 4.0 * (params.N + params.ps());
    const double a = U[n - 1];
    const double b = U[n - 6];
    if (!(a > 0.0 && b > 0.0)) return lo;
    const double g = -(std::log(a) - std::log(b)) / (std::log(r[n - 1]) - std::log(r[n - 6]));
    return std::clamp(g, lo, hi);
}

Eigen::VectorXd radial_operator_apply(const RadialOperator& op, const Eigen::VectorXd& r,
                                      const Eigen::VectorXd& U) {
    check_grid(op, r, U);
    Eigen::VectorXd A;
    assemble(op, r, U, A, nullptr);
    return A;
}

Eigen::VectorXd profile_residual(const Profile& prof, const RadialOperator& op) {
    prof.params.validate();
    check_grid(op, prof.r, prof.values);
    Eigen::VectorXd A;
    Eigen::VectorXd D;
    assemble(op, prof.r, prof.values, A, nullptr);
    drift(op, prof.r, prof.values, D, nullptr);
    return D - A;
}

Eigen::VectorXd profile_residual(const Profile& prof) {
    prof.params.validate();
    const int n = static_cast<int>(prof.r.size());
    require(n >= 8, ErrorKind::ShapeMismatch, "profile grid too short");
    RadialGridSpec g;
    g.ratio = prof.r[1] / prof.r[0];
    g.r_min = prof.r[0];
    g.r_max = prof.r[n - 1];
    return profile_residual(prof, build_radial_operator(prof.params, g));
}

double profile_mass(const RadialOperator& op, const Eigen::VectorXd& r, const Eigen::VectorXd& U) {
    check_grid(op, r, U);
    const int N = op.params.N;
    double m = 0.0;
    for (int i = 0; i < op.n; ++i) m += U[i] * std::pow(r[i], N);
    return sphere_measure(N - 1) * m * op.delta;
}

Profile rescale_profile(const Profile& prof, double b) {
    require(b > 0.0 && std::isfinite(b), ErrorKind::InvalidParameter, "scale factor must be positive");
    const double a = std::pow(b, prof.params.ps() / (2.0 - prof.params.p));
    Profile out = prof;
    out.r = prof.r / b;
    out.values = a * prof.values;
    out.mass = prof.mass * a * std::pow(b, -prof.params.N);
    return out;
}

double interpolate_profile(const Profile& prof, double rho) {
    const auto n = prof.r.size();
    if (rho <= prof.r[0]) return prof.values[0];
    if (rho >= prof.r[n - 1]) return prof.values[n - 1] * std::pow(rho / prof.r[n - 1], -prof.tail_exponent);
    const double ratio = prof.r[1] / prof.r[0];
    const double x = std::log(rho / prof.r[0]) / std::log(ratio);
    auto i = static_cast<Eigen::Index>(std::floor(x));
    i = std::clamp<Eigen::Index>(i, 0, n - 2);
    const double t = x - static_cast<double>(i);
    const double a = prof.values[i];
    const double b = prof.values[i + 1];
    if (a > 0.0 && b > 0.0) return std::exp((1.0 - t) * std::log(a) + t * std::log(b));
    return (1.0 - t) * a + t * b;
}

Profile solve_profile(const SelfSimilarParams& params, double mass, const ProfileSolverOptions& opts) {
    return solve_profile(build_radial_operator(params, opts.grid), mass, opts);
}

Profile solve_profile(const RadialOperator& op, double mass, const ProfileSolverOptions& opts) {
    op.params.validate();
    require(mass > 0.0 && std::isfinite(mass), ErrorKind::InvalidParameter, "mass must be positive");
    const SelfSimilarParams& prm = op.params;
    const int n = op.n;
    const int N = prm.N;
    const double beta = prm.beta();
    const Eigen::VectorXd r = radial_grid(op, opts.grid.r_min);

    Eigen::VectorXd U(n);
    for (int i = 0; i < n; ++i) U[i] = std::pow(1.0 + r[i] * r[i], -0.5 * (N + prm.ps()));
    U *= 1.0 / profile_mass(op, r, U);

    Profile prof;
    prof.params = prm;
    prof.beta = beta;

    auto failure = [&](const std::string& why) {
        std::ostringstream os;
        os << "profile solver: " << why << "; residual trace:";
        for (double v : prof.residual_trace) os << ' ' << v;
        fail(ErrorKind::SolverFailure, os.str());
    };

    Eigen::VectorXd A, D;
    Eigen::MatrixXd J(n, n);
    double dtau = opts.dtau0;
    bool settled = false;
    for (int step = 0; step < opts.max_steps; ++step) {
        const Eigen::VectorXd U_old = U;
        bool newton_ok = false;
        for (int it = 0; it < opts.newton_max_iter; ++it) {
            J.setZero();
            assemble(op, r, U, A, &J);
            J *= -1.0;
            drift(op, r, U, D, &J);
            const Eigen::VectorXd F = D - A;
            const Eigen::VectorXd G = U - U_old - dtau * F;
            if (G.cwiseAbs().maxCoeff() <= 1e-12 * U.cwiseAbs().maxCoeff()) {
                newton_ok = true;
                break;
            }
            Eigen::MatrixXd K = -dtau * J;
            K.diagonal().array() += 1.0;
            U -= K.partialPivLu().solve(G);
            if (!U.allFinite()) failure("non-finite iterate");
            U = U.cwiseMax(1e-300);
        }
        if (!newton_ok) failure("pseudo-time Newton stalled");
        assemble(op, r, U, A, nullptr);
        drift(op, r, U, D, nullptr);
        prof.residual_trace.push_back(interior_relative(D - A, U, beta * N));
        const double change = (U - U_old).cwiseAbs().maxCoeff() / dtau;
        dtau = std::min(dtau * opts.dtau_growth, opts.dtau_max);
        if (change <= opts.tol * U.cwiseAbs().maxCoeff()) {
            settled = true;
            break;
        }
    }
    if (!settled) failure("pseudo-time continuation did not settle");

    prof.r = r;
    prof.values = U;
    prof.tail_exponent = tail_exponent(r, U, prm);
    prof.mass = profile_mass(op, r, U);

    // The discrete family is pinned to one mass per grid; the scaling group moves it.
    const double e = prm.ps() / (2.0 - prm.p) - N;
    const double b = std::pow(mass / prof.mass, 1.0 / e);
    prof = rescale_profile(prof, b);
    prof.mass = profile_mass(op, prof.r, prof.values);
    prof.relative_residual = interior_relative(profile_residual(prof, op), prof.values, beta * N);
    prof.monotone = nonincreasing(prof.values);
    return prof;
}

ConsistencyReport selfsimilar_consistency(const Profile& prof, const RadialOperator& op, double t0,
                                          double span, int steps) {
    check_grid(op, prof.r, prof.values);
    require(t0 > 0.0 && span > 0.0 && steps >= 1, ErrorKind::InvalidParameter,
            "consistency run needs t0, span > 0 and steps >= 1");
    const SelfSimilarParams& prm = prof.params;
    const int n = op.n;
    const int N = prm.N;
    const double beta = prm.beta();
    const Eigen::VectorXd& r = prof.r;

    auto exact = [&](double t) {
        Eigen::VectorXd u(n);
        const double tb = std::pow(t, beta);
        const double amp = std::pow(t, -N * beta);
        for (int i = 0; i < n; ++i) u[i] = amp * interpolate_profile(prof, r[i] / tb);
        return u;
    };

    Eigen::VectorXd u = exact(t0);
    const double dt = span / steps;
    Eigen::VectorXd A;
    Eigen::MatrixXd J(n, n);
    for (int k = 0; k < steps; ++k) {
        const Eigen::VectorXd u_old = u;
        bool ok = false;
        for (int it = 0; it < 50; ++it) {
            J.setZero();
            assemble(op, r, u, A, &J);
            const Eigen::VectorXd G = u - u_old + dt * A;
            if (G.cwiseAbs().maxCoeff() <= 1e-13 * u_old.cwiseAbs().maxCoeff()) {
                ok = true;
                break;
            }
            Eigen::MatrixXd K = dt * J;
            K.diagonal().array() += 1.0;
            u -= K.partialPivLu().solve(G);
            if (!u.allFinite()) break;
        }
        if (!ok) fail(ErrorKind::SolverFailure, "radial evolution step did not converge");
    }

    const double t1 = t0 + span;
    const Eigen::VectorXd ref = exact(t1);
    double num = 0.0;
    double den = 0.0;
    for (int i = 0; i < n; ++i) {
        const double w = std::pow(r[i], N);
        num += std::abs(u[i] - ref[i]) * w;
        den += std::abs(ref[i]) * w;
    }
    return ConsistencyReport{t0, t1, steps, num / den};
}

} // namespace fracp
