#pragma once
#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <functional>
#include <vector>

namespace tfsde {

// tensor Dirichlet eigenpairs on the unit hyperrectangle,
// lambda = pi^2 * sum_k i_k^2, phi = prod_k sqrt(2) sin(i_k pi x_k)
struct SpectralBasis {
    int dim;           // 1, 2, or 3
    int modes_per_dim; // N
    std::vector<std::array<int, 3>> modes; // lexicographic; unused dims are 0
    Eigen::VectorXd eigenvalues;
    std::vector<std::int64_t> by_eigenvalue; // ascending-eigenvalue permutation
    std::int64_t size() const { return (std::int64_t)modes.size(); }
};

SpectralBasis build_basis(int dim, int modes_per_dim);

// elementwise lambda^alpha, 0 < alpha <= 1
Eigen::VectorXd fractional_eigenvalues(const SpectralBasis& basis, double alpha);

double evaluate_eigenfunction(const SpectralBasis& basis, const std::array<int, 3>& mode,
                              const double* point);

// evaluate a coefficient vector as a field at one point
double evaluate_field(const SpectralBasis& basis, const Eigen::VectorXd& coeffs,
                      const double* point);

struct QuadratureRule { // Gauss-Legendre on [0,1]
    Eigen::VectorXd nodes;
    Eigen::VectorXd weights;
};
QuadratureRule gauss_legendre(int points);

int default_quad_points(int modes_per_dim); // max(3N, 32)

// modal coefficients <f, phi_m> by tensor Gauss-Legendre quadrature;
// quad_points_per_dim below 2N is rejected (aliasing floor)
Eigen::VectorXd project(const std::function<double(const double*)>& f, const SpectralBasis& basis,
                        int quad_points_per_dim);

double l2_norm(const Eigen::VectorXd& coeffs);
double sobolev_norm(const Eigen::VectorXd& coeffs, const SpectralBasis& basis, double order);

// Li-Yau-type bound lambda_(i) >= 4 d pi^2/(d+2) * i^{2/d} * B_d^{-2/d} on the
// ascending eigenvalues; returns the minimal ratio lambda_(i)/bound(i)
double eigenvalue_bound_min_ratio(const SpectralBasis& basis);
// same ratio with lambda^alpha in place of lambda (reported, not asserted)
double eigenvalue_bound_min_ratio_fractional(const SpectralBasis& basis, double alpha);

} // namespace tfsde
