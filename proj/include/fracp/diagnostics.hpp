#pragma once

#include "fracp/evolution.hpp"
#include "fracp/grid_operator.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace fracp {

/// (sum |u_i|^r h)^{1/r}; r = infinity gives the sup norm.
double lp_norm(const Eigen::VectorXd& u, const GridDomain& grid, double r);
double lp_norm(const Field& u, const GridDomain& grid, double r);

struct DistributionSamples {
    std::vector<double> ks;
    /// Space-time measure of {|u| > k}. Invariant: nonincreasing, >= 0.
    std::vector<double> phis;
    double fitted_slope = 0.0;
    double fit_lo = 0.0;
    double fit_hi = 0.0;
    int fit_points = 0;
};

/// Phi(k) = sum over n >= 1 and i of h (t_n - t_{n-1}) [|u_i^n| > k]. Unset window
/// means [10 ks.front(), ks.back() / 10]. Only samples with Phi > 0 enter the fit.
DistributionSamples distribution_function(const Trajectory& traj, const std::vector<double>& ks,
                                          std::optional<std::pair<double, double>> window = {});

/// Smooth test function phi(x, t) with its time derivative.
struct TestFunction {
    std::function<double(double, double)> value;
    std::function<double(double, double)> time_derivative;
};

/// -sum u phi_t h dt + sum dt <L u, phi> - sum f phi h dt over the recorded steps.
double weak_residual(const Trajectory& traj, const TestFunction& phi, const KernelTable& table);

struct EntropyCheck {
    double k = 0.0;
    std::string test_function_id;
    double lhs = 0.0;
    double rhs = 0.0;
    double tol = 0.0;
    bool satisfied = false;
};

/// Comparison function sampled on the trajectory's time levels: v[n] at traj.fields[n].time.
struct ComparisonFunction {
    std::string id;
    std::vector<Eigen::VectorXd> values;
};

/// Assembles the truncated entropy inequality for u - v at level k:
///   sum Theta_k(w^K) h + sum_n sum (v^{n}-v^{n-1}) T_k(w^n) h + sum_n dt <L u^n, T_k(w^n)>
///   <= sum Theta_k(w^0) h + sum_n dt sum F^n T_k(w^n) h,     w = u - v.
/// tol = rel_tol * max(|lhs|, |rhs|) + 1e-14. Throws InvalidTestFunction for non-finite v.
EntropyCheck entropy_residual(const Trajectory& traj, const ComparisonFunction& v, double k,
                              const KernelTable& table, double rel_tol = 1e-3);

/// The documented comparison family: zero, bump, bump times time ramp, T_1(u).
std::vector<ComparisonFunction> entropy_test_library(const Trajectory& traj);

/// Sum over steps and ordered pairs (interior and exterior) in the discrete
/// region {max(|u|) >= h + 1, min(|u|) <= h} of |u_i - u_j|^{p-1} w_ij h dt.
double entropy_tail(const Trajectory& traj, double h_level, const KernelTable& table);

struct ExtinctionRecord {
    bool extinct = false;
    std::optional<double> T_num;
    std::optional<double> T_star_bound;
    std::vector<std::pair<double, double>> norm_trace;
};

/// T_num is the first recorded time with ||u||_2 <= threshold that stays below it.
ExtinctionRecord detect_extinction(const Trajectory& traj, double threshold);

/// Default threshold 1e-10 ||u0||_2.
ExtinctionRecord detect_extinction(const Trajectory& traj);

enum class ExtinctionVariant { L2, Lnu };

/// L2: 2/((2-p) S) ||u0||_2^{2-p} |Omega|^{p/2 - p/p*}, for 2N/(N+2s) <= p < 2.
/// Lnu: ||u0||_{nu+1}^{2-p} / ((2-p) c3 S), nu + 1 = N(2-p)/(ps), for 1 < p < 2N/(N+2s);
/// c3 is the published monotonicity constant at alpha = nu.
double extinction_bound(const Field& u0, const FracParams& params, const GridDomain& grid,
                        double S, ExtinctionVariant variant);

/// Largest ||u0||_2 for which the concave-reaction energy argument forces extinction:
/// ||u0||_2^{2-p} < S |Omega|^{p/p* - p/2} (reaction coefficient 1, exponent 1).
double concave_smallness_threshold(const FracParams& params, const GridDomain& grid, double S);

struct SobolevEstimate {
    double value = 0.0;
    bool stagnated = false;
    std::vector<double> per_start;
    Eigen::VectorXd minimizer;
};

/// S_h = min energy_pairing(u,u) / ||u||_{p*}^p by projected gradient descent from
/// `starts` seeded random fields.
SobolevEstimate estimate_sobolev_constant(const GridDomain& grid, const FracParams& params,
                                          std::uint64_t seed = 1, int starts = 8,
                                          int max_iter = 3000);

/// energy_pairing(u,u) / ||u||_{p*}^p.
double sobolev_quotient(const Eigen::VectorXd& u, const KernelTable& table);

/// Minimum of u over the nodes at the given time index.
double positivity_check(const Trajectory& traj, std::size_t t_index);

struct CauchyGap {
    double gap = 0.0;
    double bound = 0.0;
    bool satisfied = false;
};

/// gap = max_t ||u_n - u_m||_1; bound = (2 |Omega_T|)^{1/2} data_gap^{1/2} + 2 data_gap.
CauchyGap cauchy_gap(const Trajectory& traj_n, const Trajectory& traj_m, double data_gap,
                     double rel_tol = 1e-9);

/// ||u0n - u0m||_1 + sum dt ||F_n - F_m||_1 from the recorded data of two runs.
double data_gap(const Trajectory& traj_n, const Trajectory& traj_m);

/// (sum_n dt seminorm(u^n)^q)^{1/q} over steps n >= 1.
double trajectory_seminorm(const Trajectory& traj, double s1, double q);

} // namespace fracp
