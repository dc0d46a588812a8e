#include "fracp/diagnostics.hpp"

#include "fracp/algebra.hpp"
#include "fracp/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace fracp {

namespace {

void require_nonempty(const Trajectory& traj) {
    require(!traj.fields.empty(), ErrorKind::InvalidParameter, "trajectory is empty");
}

double step_dt(const Trajectory& traj, std::size_t n) {
    return traj.fields[n].time - traj.fields[n - 1].time;
}

Eigen::VectorXd truncated(const Eigen::VectorXd& v, double k) {
    const TruncationLevel lvl(k);
    Eigen::VectorXd out(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = truncate(v[i], lvl);
    return out;
}

double theta_sum(const Eigen::VectorXd& w, double k, double h) {
    const TruncationLevel lvl(k);
    double s = 0.0;
    for (Eigen::Index i = 0; i < w.size(); ++i) s += primitive_theta(w[i], lvl);
    return s * h;
}

} // namespace

double lp_norm(const Eigen::VectorXd& u, const GridDomain& grid, double r) {
    require(r >= 1.0, ErrorKind::InvalidParameter, "lp_norm requires r >= 1");
    check_shape(u, grid);
    if (std::isinf(r)) return u.size() ? u.cwiseAbs().maxCoeff() : 0.0;
    if (r == 1.0) return u.cwiseAbs().sum() * grid.h();
    if (r == 2.0) return std::sqrt(u.squaredNorm() * grid.h());
    double s = 0.0;
    for (Eigen::Index i = 0; i < u.size(); ++i) s += std::pow(std::abs(u[i]), r);
    return std::pow(s * grid.h(), 1.0 / r);
}

double lp_norm(const Field& u, const GridDomain& grid, double r) {
    return lp_norm(u.values, grid, r);
}

DistributionSamples distribution_function(const Trajectory& traj, const std::vector<double>& ks,
                                          std::optional<std::pair<double, double>> window) {
    require_nonempty(traj);
    require(!ks.empty(), ErrorKind::InvalidParameter, "need at least one level k");
    for (std::size_t i = 0; i < ks.size(); ++i) {
        require(ks[i] > 0.0 && (i == 0 || ks[i] > ks[i - 1]), ErrorKind::InvalidParameter,
                "levels k must be positive and increasing");
    }
    DistributionSamples out;
    out.ks = ks;
    out.phis.assign(ks.size(), 0.0);
    const double h = traj.grid.h();

    // Sort |u| per step once; counting above each k is then a binary search.
    std::vector<double> mags;
    for (std::size_t n = 1; n < traj.fields.size(); ++n) {
        const double w = h * step_dt(traj, n);
        const Eigen::VectorXd& u = traj.fields[n].values;
        mags.assign(u.size(), 0.0);
        for (Eigen::Index i = 0; i < u.size(); ++i) mags[i] = std::abs(u[i]);
        std::sort(mags.begin(), mags.end());
        for (std::size_t j = 0; j < ks.size(); ++j) {
            const auto above = mags.end() - std::upper_bound(mags.begin(), mags.end(), ks[j]);
            out.phis[j] += w * static_cast<double>(above);
        }
    }

    const auto [lo, hi] = window ? *window : std::make_pair(10.0 * ks.front(), ks.back() / 10.0);
    out.fit_lo = lo;
    out.fit_hi = hi;
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    int n = 0;
    for (std::size_t j = 0; j < ks.size(); ++j) {
        if (ks[j] < lo || ks[j] > hi || !(out.phis[j] > 0.0)) continue;
        const double x = std::log(ks[j]);
        const double y = std::log(out.phis[j]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++n;
    }
    out.fit_points = n;
    const double den = n * sxx - sx * sx;
    if (n < 2 || !(den > 0.0)) fail(ErrorKind::FitFailure, "fit window holds fewer than 2 positive samples");
    out.fitted_slope = (n * sxy - sx * sy) / den;
    return out;
}

double weak_residual(const Trajectory& traj, const TestFunction& phi, const KernelTable& table) {
    require_nonempty(traj);
    require(static_cast<bool>(phi.value) && static_cast<bool>(phi.time_derivative),
            ErrorKind::InvalidTestFunction, "test function needs value and time derivative");
    const GridDomain& g = table.grid;
    const double h = g.h();
    const int M = g.size();
    double total = 0.0;
    Eigen::VectorXd pv(M);
    for (std::size_t n = 1; n < traj.fields.size(); ++n) {
        const double dt = step_dt(traj, n);
        const double t = traj.fields[n].time;
        const Eigen::VectorXd& u = traj.fields[n].values;
        double time_part = 0.0;
        double data_part = 0.0;
        for (int i = 0; i < M; ++i) {
            const double x = g.node(i);
            pv[i] = phi.value(x, t);
            time_part += u[i] * phi.time_derivative(x, t);
            data_part += traj.forcing[n][i] * pv[i];
        }
        if (pv.cwiseAbs().maxCoeff() == 0.0) continue;
        total += dt * (-time_part * h + energy_pairing(u, pv, table) - data_part * h);
    }
    return total;
}

EntropyCheck entropy_residual(const Trajectory& traj, const ComparisonFunction& v, double k,
                              const KernelTable& table, double rel_tol) {
    require_nonempty(traj);
    require(k > 0.0, ErrorKind::InvalidParameter, "entropy level k must be positive");
    require(v.values.size() == traj.fields.size(), ErrorKind::InvalidTestFunction,
            "comparison function must be sampled on every time level");
    for (const auto& vn : v.values) {
        require(vn.size() == table.grid.size(), ErrorKind::ShapeMismatch,
                "comparison function has the wrong length");
        require(vn.allFinite(), ErrorKind::InvalidTestFunction, "comparison function is unbounded");
    }
    const double h = table.grid.h();
    const std::size_t K = traj.fields.size() - 1;

    const Eigen::VectorXd w0 = traj.fields[0].values - v.values[0];
    const Eigen::VectorXd wK = traj.fields[K].values - v.values[K];
    double lhs = theta_sum(wK, k, h);
    double rhs = theta_sum(w0, k, h);
    for (std::size_t n = 1; n <= K; ++n) {
        const double dt = step_dt(traj, n);
        const Eigen::VectorXd& u = traj.fields[n].values;
        const Eigen::VectorXd Tw = truncated(u - v.values[n], k);
        lhs += (v.values[n] - v.values[n - 1]).dot(Tw) * h;
        lhs += dt * energy_pairing(u, Tw, table);
        rhs += dt * traj.forcing[n].dot(Tw) * h;
    }
    EntropyCheck out;
    out.k = k;
    out.test_function_id = v.id;
    out.lhs = lhs;
    out.rhs = rhs;
    out.tol = rel_tol * std::max(std::abs(lhs), std::abs(rhs)) + 1e-14;
    out.satisfied = lhs <= rhs + out.tol;
    return out;
}

std::vector<ComparisonFunction> entropy_test_library(const Trajectory& traj) {
    require_nonempty(traj);
    const GridDomain& g = traj.grid;
    const int M = g.size();
    const std::size_t L = traj.fields.size();
    const double T = traj.fields.back().time;
    const double amp = 0.5 * traj.fields[0].values.cwiseAbs().maxCoeff();
    const double center = 0.5 * (g.x_left() + g.x_right());
    const double radius = 0.25 * g.length();

    Eigen::VectorXd bump(M);
    for (int i = 0; i < M; ++i) {
        const double z = (g.node(i) - center) / radius;
        bump[i] = std::abs(z) < 1.0 ? amp * (1.0 - z * z) * (1.0 - z * z) : 0.0;
    }

    std::vector<ComparisonFunction> lib;
    lib.push_back({"zero", std::vector<Eigen::VectorXd>(L, Eigen::VectorXd::Zero(M))});
    lib.push_back({"bump", std::vector<Eigen::VectorXd>(L, bump)});
    ComparisonFunction ramp{"bump_ramp", {}};
    ComparisonFunction trunc{"truncation_T1", {}};
    for (std::size_t n = 0; n < L; ++n) {
        const double s = T > 0.0 ? traj.fields[n].time / T : 0.0;
        ramp.values.push_back(s * bump);
        trunc.values.push_back(truncated(traj.fields[n].values, 1.0));
    }
    lib.push_back(std::move(ramp));
    lib.push_back(std::move(trunc));
    return lib;
}

double entropy_tail(const Trajectory& traj, double h_level, const KernelTable& table) {
    require_nonempty(traj);
    require(h_level >= 0.0, ErrorKind::InvalidParameter, "tail level must be >= 0");
    const int M = table.grid.size();
    const double p = table.params.p();
    const double h = table.grid.h();
    const double top = h_level + 1.0;
    double total = 0.0;
    for (std::size_t n = 1; n < traj.fields.size(); ++n) {
        const Eigen::VectorXd& u = traj.fields[n].values;
        double s = 0.0;
        for (int i = 0; i < M; ++i) {
            const double ai = std::abs(u[i]);
            for (int j = i + 1; j < M; ++j) {
                const double aj = std::abs(u[j]);
                if (std::max(ai, aj) >= top && std::min(ai, aj) <= h_level) {
                    s += 2.0 * std::pow(std::abs(u[i] - u[j]), p - 1.0) * table.coupling(i, j);
                }
            }
            // Exterior partner y carries u = 0 <= h; both orderings of the pair.
            if (ai >= top) s += 2.0 * std::pow(ai, p - 1.0) * table.tail[i];
        }
        total += s * h * step_dt(traj, n);
    }
    return total;
}

ExtinctionRecord detect_extinction(const Trajectory& traj, double threshold) {
    require_nonempty(traj);
    require(threshold >= 0.0, ErrorKind::InvalidParameter, "threshold must be >= 0");
    ExtinctionRecord rec;
    for (const auto& f : traj.fields) rec.norm_trace.emplace_back(f.time, lp_norm(f, traj.grid, 2.0));
    std::optional<std::size_t> first;
    for (std::size_t n = rec.norm_trace.size(); n-- > 0;) {
        if (rec.norm_trace[n].second <= threshold) {
            first = n;
        } else {
            break;
        }
    }
    if (first) {
        rec.extinct = true;
        rec.T_num = rec.norm_trace[*first].first;
    }
    return rec;
}

ExtinctionRecord detect_extinction(const Trajectory& traj) {
    require_nonempty(traj);
    return detect_extinction(traj, 1e-10 * lp_norm(traj.fields[0], traj.grid, 2.0));
}

double extinction_bound(const Field& u0, const FracParams& params, const GridDomain& grid,
                        double S, ExtinctionVariant variant) {
    require(S > 0.0 && std::isfinite(S), ErrorKind::InvalidParameter, "S must be positive");
    require(params.subcritical(), ErrorKind::InvalidParameter, "requires p*s < N");
    const double p = params.p();
    const double s = params.s();
    const double N = params.N();
    const double split = 2.0 * N / (N + 2.0 * s);
    if (variant == ExtinctionVariant::L2) {
        require(p >= split && p < 2.0, ErrorKind::InvalidParameter,
                "L2 extinction bound needs 2N/(N+2s) <= p < 2");
        const double ps_star = params.critical_exponent();
        const double norm = lp_norm(u0, grid, 2.0);
        return 2.0 / ((2.0 - p) * S) * std::pow(norm, 2.0 - p) *
               std::pow(grid.length(), p / 2.0 - p / ps_star);
    }
    require(p > 1.0 && p < split, ErrorKind::InvalidParameter,
            "L^{nu+1} extinction bound needs 1 < p < 2N/(N+2s)");
    const double nu1 = N * (2.0 - p) / params.ps();
    const double c3 = published_c3(p, nu1 - 1.0);
    const double norm = lp_norm(u0, grid, nu1);
    return std::pow(norm, 2.0 - p) / ((2.0 - p) * c3 * S);
}

double concave_smallness_threshold(const FracParams& params, const GridDomain& grid, double S) {
    require(S > 0.0, ErrorKind::InvalidParameter, "S must be positive");
    require(params.subcritical(), ErrorKind::InvalidParameter, "requires p*s < N");
    const double p = params.p();
    require(p < 2.0, ErrorKind::InvalidParameter, "smallness threshold needs p < 2");
    const double kappa = std::pow(grid.length(), p / params.critical_exponent() - p / 2.0);
    return std::pow(S * kappa, 1.0 / (2.0 - p));
}

double sobolev_quotient(const Eigen::VectorXd& u, const KernelTable& table) {
    require(table.params.subcritical(), ErrorKind::InvalidParameter, "requires p*s < N");
    const double pst = table.params.critical_exponent();
    const double p = table.params.p();
    double nn = 0.0;
    for (Eigen::Index i = 0; i < u.size(); ++i) nn += std::pow(std::abs(u[i]), pst);
    nn *= table.grid.h();
    return energy_pairing(u, u, table) / std::pow(nn, p / pst);
}

SobolevEstimate estimate_sobolev_constant(const GridDomain& grid, const FracParams& params,
                                          std::uint64_t seed, int starts, int max_iter) {
    require(starts >= 1 && max_iter >= 1, ErrorKind::InvalidParameter,
            "need at least one start and one iteration");
    require(params.subcritical(), ErrorKind::InvalidParameter, "requires p*s < N");
    const KernelTable table = build_kernel_table(grid, params);
    const double p = params.p();
    const double pst = params.critical_exponent();
    const double h = grid.h();
    const int M = grid.size();

    auto gradient = [&](const Eigen::VectorXd& u) {
        const double P = energy_pairing(u, u, table);
        double nn = 0.0;
        for (int i = 0; i < M; ++i) nn += std::pow(std::abs(u[i]), pst);
        nn *= h;
        const double nq = std::pow(nn, p / pst);
        const Eigen::VectorXd gP = p * h * apply_operator(u, table);
        Eigen::VectorXd gN(M);
        for (int i = 0; i < M; ++i) {
            gN[i] = p * std::pow(nn, p / pst - 1.0) * signed_power(u[i], pst) * h;
        }
        return Eigen::VectorXd((gP * nq - P * gN) / (nq * nq));
    };

    SobolevEstimate est;
    est.value = std::numeric_limits<double>::infinity();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int st = 0; st < starts; ++st) {
        Eigen::VectorXd u(M);
        for (int i = 0; i < M; ++i) u[i] = std::abs(normal(rng)) + 0.1;
        double q = sobolev_quotient(u, table);
        double a = 1.0;
        bool converged = false;
        for (int it = 0; it < max_iter; ++it) {
            const Eigen::VectorXd g = gradient(u);
            const double gmax = g.cwiseAbs().maxCoeff();
            if (!(gmax > 0.0)) {
                converged = true;
                break;
            }
            // Step scaled to the field's magnitude; |.| keeps iterates nonnegative,
            // which never increases the quotient.
            const Eigen::VectorXd dir = g * (u.cwiseAbs().maxCoeff() / gmax);
            a = std::min(1.0, 2.0 * a);
            Eigen::VectorXd un;
            double qn = q;
            while (true) {
                un = (u - a * dir).cwiseAbs();
                qn = sobolev_quotient(un, table);
                if (qn < q) break;
                a *= 0.5;
                if (a < 1e-14) break;
            }
            if (a < 1e-14) {
                converged = true;
                break;
            }
            const double dq = q - qn;
            u = un / un.cwiseAbs().maxCoeff();
            q = qn;
            if (dq < 1e-13 * q) {
                converged = true;
                break;
            }
        }
        if (!converged) est.stagnated = true;
        est.per_start.push_back(q);
        if (q < est.value) {
            est.value = q;
            est.minimizer = u;
        }
    }
    return est;
}

double positivity_check(const Trajectory& traj, std::size_t t_index) {
    require(t_index < traj.fields.size(), ErrorKind::InvalidParameter, "time index out of range");
    return traj.fields[t_index].values.minCoeff();
}

CauchyGap cauchy_gap(const Trajectory& traj_n, const Trajectory& traj_m, double data_gap,
                     double rel_tol) {
    require(traj_n.grid == traj_m.grid, ErrorKind::ShapeMismatch, "trajectories on different grids");
    require(traj_n.fields.size() == traj_m.fields.size(), ErrorKind::ShapeMismatch,
            "trajectories on different time grids");
    require_nonempty(traj_n);
    require(data_gap >= 0.0, ErrorKind::InvalidParameter, "data gap must be >= 0");
    CauchyGap out;
    for (std::size_t n = 0; n < traj_n.fields.size(); ++n) {
        require(traj_n.fields[n].time == traj_m.fields[n].time, ErrorKind::ShapeMismatch,
                "trajectories on different time grids");
        out.gap = std::max(out.gap,
                           lp_norm(traj_n.fields[n].values - traj_m.fields[n].values, traj_n.grid, 1.0));
    }
    const double omega_T = traj_n.grid.length() * traj_n.fields.back().time;
    out.bound = std::sqrt(2.0 * omega_T * data_gap) + 2.0 * data_gap;
    out.satisfied = out.gap <= out.bound * (1.0 + rel_tol) + 1e-300;
    return out;
}

double data_gap(const Trajectory& traj_n, const Trajectory& traj_m) {
    require(traj_n.grid == traj_m.grid, ErrorKind::ShapeMismatch, "trajectories on different grids");
    require(traj_n.fields.size() == traj_m.fields.size(), ErrorKind::ShapeMismatch,
            "trajectories on different time grids");
    require_nonempty(traj_n);
    const GridDomain& g = traj_n.grid;
    double gap = lp_norm(traj_n.fields[0].values - traj_m.fields[0].values, g, 1.0);
    for (std::size_t n = 1; n < traj_n.fields.size(); ++n) {
        gap += step_dt(traj_n, n) * lp_norm(traj_n.forcing[n] - traj_m.forcing[n], g, 1.0);
    }
    return gap;
}

double trajectory_seminorm(const Trajectory& traj, double s1, double q) {
    require_nonempty(traj);
    double total = 0.0;
    for (std::size_t n = 1; n < traj.fields.size(); ++n) {
        total += step_dt(traj, n) * std::pow(gagliardo_seminorm(traj.fields[n], traj.grid, s1, q), q);
    }
    return std::pow(total, 1.0 / q);
}

} // namespace fracp
