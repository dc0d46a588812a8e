#pragma once

namespace fracp {

/// Angular reduction of |x' - sigma y'|^{-(N - theta)} over the unit sphere.
struct AngularKernelSpec {
    int N = 2;
    double theta = 0.0;

    /// Throws InvalidParameter unless N >= 2 and N - theta > 0.
    void validate() const;
    double exponent() const noexcept { return 0.5 * (N - theta); }
};

/// Surface measure of the unit sphere S^d in R^{d+1}.
double sphere_measure(int d);

/// K_theta(sigma). Returns +infinity at sigma = 1 when the angular integral diverges.
double angular_kernel(double sigma, const AngularKernelSpec& spec);

/// Integral of sigma^{N-1-a} K_theta(sigma) over [lower, upper]; upper may be +infinity.
double kernel_moment(const AngularKernelSpec& spec, double a, double lower, double upper);

} // namespace fracp
