#pragma once

#include <Eigen/Dense>

#include <vector>

namespace fracp {

/// Exponents of the radial problem. Invariant: p > 2, 0 < s < 1, N >= 2, ps < N.
struct SelfSimilarParams {
    double p = 3.0;
    double s = 0.5;
    int N = 2;

    void validate() const;
    double ps() const noexcept { return p * s; }
    /// beta = 1 / (ps + N (p - 2)).
    double beta() const noexcept { return 1.0 / (ps() + N * (p - 2.0)); }
};

/// Geometric grid r_i = r_min ratio^i, i = 0..n-1, with n chosen so r_{n-1} ~ r_max.
struct RadialGridSpec {
    double r_min = 1e-3;
    double r_max = 50.0;
    double ratio = 1.05;
    /// The power tail is carried on virtual nodes out to r_max * tail_reach.
    double tail_reach = 1e4;
};

/// Scale-free quadrature weights of sigma^{N-1} K_s(sigma) on log-cells of width
/// delta = ln(ratio). A grid r = b r_ref reuses the same weights for every b > 0.
struct RadialOperator {
    SelfSimilarParams params;
    int n = 0;          // real nodes
    int extension = 0;  // virtual tail nodes
    double ratio = 1.05;
    double delta = 0.0;
    /// Cell weight for partner offset k, stored at k + n - 1; the k = 0 entry is 0.
    Eigen::VectorXd cell;
    /// Integral over (0, ratio^{-i-1/2}) for node i (partners below r_0 take U_0).
    Eigen::VectorXd low;
    /// Integral beyond the last virtual node for node i (partners there take 0).
    Eigen::VectorXd high;

    double weight(int k) const { return cell[k + n - 1]; }
};

RadialOperator build_radial_operator(const SelfSimilarParams& params, const RadialGridSpec& grid = {});

/// Reference grid for an operator: r_min ratio^i.
Eigen::VectorXd radial_grid(const RadialOperator& op, double r_min);

struct Profile {
    SelfSimilarParams params;
    Eigen::VectorXd r;
    Eigen::VectorXd values;
    double beta = 0.0;
    /// Decay exponent of the fitted power tail beyond r.back().
    double tail_exponent = 0.0;
    double mass = 0.0;
    /// max |residual| on interior nodes / (beta N max values).
    double relative_residual = 0.0;
    bool monotone = true;
    std::vector<double> residual_trace;
};

/// Fitted decay exponent from nodes n-6 and n-1, clamped to [N + 0.1, 4 (N + ps)].
double tail_exponent(const Eigen::VectorXd& r, const Eigen::VectorXd& U, const SelfSimilarParams& params);

/// r^{-ps} times the radial integral of flux(U(r) - U(sigma r)) sigma^{N-1} K_s(sigma).
Eigen::VectorXd radial_operator_apply(const RadialOperator& op, const Eigen::VectorXd& r,
                                      const Eigen::VectorXd& U);

/// beta (N U + r U') - radial_operator_apply(U).
Eigen::VectorXd profile_residual(const Profile& prof, const RadialOperator& op);
Eigen::VectorXd profile_residual(const Profile& prof);

/// |S^{N-1}| sum U_i r_i^N delta.
double profile_mass(const RadialOperator& op, const Eigen::VectorXd& r, const Eigen::VectorXd& U);

struct ProfileSolverOptions {
    RadialGridSpec grid;
    double dtau0 = 0.05;
    double dtau_growth = 1.5;
    double dtau_max = 1e3;
    int max_steps = 400;
    int newton_max_iter = 30;
    /// Stop when max |U - U_old| / dtau <= tol * max U.
    double tol = 1e-10;
};

/// Solves the profile equation by implicit pseudo-time continuation of the rescaled
/// flow, then maps it to the requested mass with the equation's scaling group.
/// Throws SolverFailure with the residual trace on divergence.
Profile solve_profile(const SelfSimilarParams& params, double mass,
                      const ProfileSolverOptions& opts = {});
Profile solve_profile(const RadialOperator& op, double mass, const ProfileSolverOptions& opts = {});

/// Profile V(r) = a U(b r) on the grid r / b with a = b^{ps/(2-p)}: the scaling
/// symmetry of the profile equation. Multiplies the mass by b^{ps/(2-p) - N}.
Profile rescale_profile(const Profile& prof, double b);

/// Evaluates U at arbitrary radii: log-linear inside, U_0 below, power tail above.
double interpolate_profile(const Profile& prof, double rho);

struct ConsistencyReport {
    double t0 = 1.0;
    double t1 = 1.0;
    int steps = 0;
    double relative_l1_error = 0.0;
};

/// Evolves u_t = -radial operator from u(., t0) = t0^{-N beta} U(r / t0^beta) on the
/// profile grid by implicit Euler and compares with the self-similar form at t0 + span.
ConsistencyReport selfsimilar_consistency(const Profile& prof, const RadialOperator& op,
                                          double t0 = 1.0, double span = 0.5, int steps = 50);

} // namespace fracp
