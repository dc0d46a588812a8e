#pragma once

#include <Eigen/Dense>

namespace fracp {

/// Uniform cell-centered mesh of (x_left, x_right); the exterior carries u = 0.
class GridDomain {
public:
    GridDomain(double x_left, double x_right, int M);

    double x_left() const noexcept { return x_left_; }
    double x_right() const noexcept { return x_right_; }
    int size() const noexcept { return M_; }
    double h() const noexcept { return h_; }
    double length() const noexcept { return x_right_ - x_left_; }
    double node(int i) const noexcept { return x_left_ + (i + 0.5) * h_; }
    double cell_left(int i) const noexcept { return x_left_ + i * h_; }
    double cell_right(int i) const noexcept { return x_left_ + (i + 1) * h_; }
    Eigen::VectorXd nodes() const;

    bool operator==(const GridDomain& o) const noexcept {
        return x_left_ == o.x_left_ && x_right_ == o.x_right_ && M_ == o.M_;
    }

private:
    double x_left_;
    double x_right_;
    int M_;
    double h_;
};

/// Exponents of the operator. Invariant: 1 < p, 0 < s < 1. The discrete operator
/// needs nothing more; the Sobolev embedding additionally needs p s < N.
class FracParams {
public:
    FracParams(double p, double s, int N = 1);

    double p() const noexcept { return p_; }
    double s() const noexcept { return s_; }
    int N() const noexcept { return N_; }
    double ps() const noexcept { return p_ * s_; }
    bool subcritical() const noexcept { return p_ * s_ < N_; }
    /// p*_s = pN / (N - ps); +infinity when ps >= N.
    double critical_exponent() const noexcept { return p_star_; }

private:
    double p_;
    double s_;
    int N_;
    double p_star_;
};

/// w_ij = h |x_i - x_j|^{-(1+ps)} (w_ii = 0) and the exact exterior integral t_i.
/// coupling = weights + singular_cell on |i - j| = 1; the operator uses coupling.
/// singular_cell = -zeta(-a) h^{-ps}, a = p(1 - s) - 1, clamped at 0, restores the even
/// leading term of the omitted cell around x_i.
struct KernelTable {
    GridDomain grid;
    FracParams params;
    Eigen::MatrixXd weights;
    Eigen::VectorXd tail;
    double singular_cell = 0.0;
    Eigen::MatrixXd coupling;
};

struct Field {
    Eigen::VectorXd values;
    double time = 0.0;
};

/// (sigma^2 + eps^2)^{(p-2)/2} sigma; eps = 0 gives |sigma|^{p-2} sigma.
double flux(double sigma, double p, double eps = 0.0) noexcept;

/// Derivative of flux in sigma; 0 at sigma = 0 when eps = 0 and p != 2.
double flux_derivative(double sigma, double p, double eps = 0.0) noexcept;

KernelTable build_kernel_table(const GridDomain& grid, const FracParams& params);

/// (Lu)_i = sum_j flux(u_i - u_j) c_ij + flux(u_i) t_i with c = coupling.
Eigen::VectorXd apply_operator(const Eigen::VectorXd& u, const KernelTable& table,
                               double eps = 0.0);
Field apply_operator(const Field& u, const KernelTable& table, double eps = 0.0);

/// 1/2 sum_ij flux(u_i-u_j)(v_i-v_j) c_ij h + sum_i flux(u_i) v_i t_i h.
double energy_pairing(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                      const KernelTable& table);
double energy_pairing(const Field& u, const Field& v, const KernelTable& table);

/// [sum_{i != j} |u_i-u_j|^q h^2 / |x_i-x_j|^{1+q s1}]^{1/q} over the interior.
double gagliardo_seminorm(const Eigen::VectorXd& u, const GridDomain& grid, double s1, double q);
double gagliardo_seminorm(const Field& u, const GridDomain& grid, double s1, double q);

/// Throws ShapeMismatch unless v has one entry per grid node.
void check_shape(const Eigen::VectorXd& v, const GridDomain& grid);

} // namespace fracp
