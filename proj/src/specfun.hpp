#pragma once

namespace tfsde {

struct BesselEvalConfig {
    double truncation_bound; // upper integration limit U
    double quad_step;        // initial trapezoid step
    double abs_tol;

    // U solves y*cosh(U) - |order|*U >= -ln(abs_tol) + margin, so the
    // discarded tail is far below abs_tol
    static BesselEvalConfig for_target(double order, double y, double abs_tol = 1e-12);
};

double ln_gamma(double x);

// K_nu(y) = int_0^inf cosh(nu*u) * exp(-y*cosh(u)) du
double bessel_k(double order, double y, const BesselEvalConfig& cfg);
double bessel_k(double order, double y);

namespace detail {
long double bessel_k_ld(double order, long double y, const BesselEvalConfig& cfg);
}

} // namespace tfsde
