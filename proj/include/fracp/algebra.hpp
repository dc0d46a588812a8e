#pragma once

#include <cstdint>

namespace fracp {

/// Truncation height k > 0 used by T_k, G_k and Theta_k.
class TruncationLevel {
public:
    explicit TruncationLevel(double k);
    double value() const noexcept { return k_; }

private:
    double k_;
};

/// T_k: clamp to [-k, k].
double truncate(double sigma, TruncationLevel k) noexcept;

/// G_k(sigma) = sigma - T_k(sigma).
double remainder(double sigma, TruncationLevel k) noexcept;

/// Theta_k(sigma) = integral of T_k from 0 to sigma.
double primitive_theta(double sigma, TruncationLevel k) noexcept;

/// |sigma|^(p-2) sigma, with the value 0 at sigma = 0.
double signed_power(double sigma, double p) noexcept;

struct InequalityReport {
    double p = 0.0;
    double alpha = 0.0;
    std::uint64_t samples = 0;
    std::uint64_t seed = 0;
    /// Extreme ratios LHS/RHS observed on the random sample.
    double empirical_c3 = 0.0;  // minimum over samples
    double empirical_c4 = 0.0;  // maximum over samples
    /// Constants published by the module for this (p, alpha).
    double published_c1 = 0.0;
    double published_c3 = 0.0;
    double published_c4 = 0.0;
    /// empirical_c3 / published_c3 (>= 1 when the lower bound holds).
    double worst_ratio_alge3 = 0.0;
    /// empirical_c4 / published_c4 (<= 1 when the upper bound holds).
    double worst_ratio_alge2 = 0.0;
    bool alge2_checked = false;
    std::uint64_t violations_alge1 = 0;
    std::uint64_t violations_alge3 = 0;
    std::uint64_t violations_alge2 = 0;
    std::uint64_t violations_truncation = 0;
    std::uint64_t violations_remainder = 0;
    std::uint64_t violations = 0;
};

/// Ratio |a-b|^{p-2}(a-b)(a^alpha-b^alpha) / |a^g-b^g|^p with g = (p+alpha-1)/p.
/// Defined as 1 when a == b.
double alge3_ratio(double a, double b, double p, double alpha) noexcept;

/// Ratio |a+b|^{alpha-1}|a-b|^p / |a^g-b^g|^p; 1 when a == b.
double alge2_ratio(double a, double b, double p, double alpha) noexcept;

/// Lower constant for the monotonicity inequality, from a deterministic
/// scan of the homogeneous ratio over b/a in (0, 1].
double published_c3(double p, double alpha);

/// Upper constant for the power-sum inequality, same construction.
double published_c4(double p, double alpha);

/// max(1, 2^(alpha-1)).
double published_c1(double alpha) noexcept;

InequalityReport check_inequalities(double p, double alpha, std::uint64_t samples,
                                    std::uint64_t seed);

} // namespace fracp
