#include "spectral.hpp"
#include "errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace tfsde {

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;

void check_alpha(double alpha) {
    if (!(alpha > 0.0) || !(alpha <= 1.0))
        throw config_error("fractional power alpha must lie in (0, 1]");
}

// sine factors with quadrature weights folded in, for analysis sums
Eigen::MatrixXd sine_matrix(int n_modes, const QuadratureRule& rule, bool weighted) {
    Eigen::MatrixXd s(n_modes, rule.nodes.size());
    for (int i = 0; i < n_modes; ++i)
        for (Eigen::Index a = 0; a < rule.nodes.size(); ++a) {
            double v = std::sqrt(2.0) * std::sin((i + 1) * kPi * rule.nodes(a));
            s(i, a) = weighted ? v * rule.weights(a) : v;
        }
    return s;
}

} // namespace

SpectralBasis build_basis(int dim, int modes_per_dim) {
    if (dim < 1 || dim > 3)
        throw config_error("basis dimension must be 1, 2, or 3");
    if (modes_per_dim < 1)
        throw config_error("modes_per_dim must be at least 1");
    const int n = modes_per_dim;
    SpectralBasis basis;
    basis.dim = dim;
    basis.modes_per_dim = n;
    std::int64_t total = 1;
    for (int k = 0; k < dim; ++k) total *= n;
    basis.modes.reserve((size_t)total);
    basis.eigenvalues.resize(total);
    std::array<int, 3> idx{1, 1, 1};
    for (std::int64_t flat = 0; flat < total; ++flat) {
        std::array<int, 3> mode{0, 0, 0};
        double ssq = 0.0;
        for (int k = 0; k < dim; ++k) {
            mode[(size_t)k] = idx[(size_t)k];
            ssq += (double)idx[(size_t)k] * idx[(size_t)k];
        }
        basis.modes.push_back(mode);
        basis.eigenvalues(flat) = kPi * kPi * ssq;
        for (int k = dim - 1; k >= 0; --k) { // lexicographic, last index fastest
            if (++idx[(size_t)k] <= n) break;
            idx[(size_t)k] = 1;
        }
    }
    basis.by_eigenvalue.resize((size_t)total);
    std::iota(basis.by_eigenvalue.begin(), basis.by_eigenvalue.end(), 0);
    std::stable_sort(basis.by_eigenvalue.begin(), basis.by_eigenvalue.end(),
                     [&](std::int64_t a, std::int64_t b) {
                         return basis.eigenvalues(a) < basis.eigenvalues(b);
                     });
    return basis;
}

Eigen::VectorXd fractional_eigenvalues(const SpectralBasis& basis, double alpha) {
    check_alpha(alpha);
    return basis.eigenvalues.array().pow(alpha);
}

double evaluate_eigenfunction(const SpectralBasis& basis, const std::array<int, 3>& mode,
                              const double* point) {
    double v = 1.0;
    for (int k = 0; k < basis.dim; ++k) {
        int i = mode[(size_t)k];
        if (i < 1 || i > basis.modes_per_dim)
            throw config_error("eigenfunction index out of range");
        v *= std::sqrt(2.0) * std::sin(i * kPi * point[k]);
    }
    return v;
}

double evaluate_field(const SpectralBasis& basis, const Eigen::VectorXd& coeffs,
                      const double* point) {
    if (coeffs.size() != basis.size())
        throw shape_error("evaluate_field: coefficient count does not match basis");
    double v = 0.0;
    for (std::int64_t m = 0; m < basis.size(); ++m)
        v += coeffs(m) * evaluate_eigenfunction(basis, basis.modes[(size_t)m], point);
    return v;
}

QuadratureRule gauss_legendre(int points) {
    if (points < 1)
        throw config_error("quadrature needs at least one point");
    const int n = points;
    Eigen::VectorXd x(n), w(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double xi = std::cos(kPi * (i + 0.75) / (n + 0.5));
        double p1 = 0.0, dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double a = 1.0, b = xi;
            for (int j = 2; j <= n; ++j) {
                double c = ((2 * j - 1) * xi * b - (j - 1) * a) / j;
                a = b;
                b = c;
            }
            p1 = b;
            dp = n * (xi * b - a) / (xi * xi - 1.0);
            double step = p1 / dp;
            xi -= step;
            if (std::fabs(step) < 1e-16) break;
        }
        x(i) = -xi;
        x(n - 1 - i) = xi;
        w(i) = w(n - 1 - i) = 2.0 / ((1.0 - xi * xi) * dp * dp);
    }
    QuadratureRule rule;
    rule.nodes = (x.array() + 1.0) * 0.5;
    rule.weights = w * 0.5;
    return rule;
}

int default_quad_points(int modes_per_dim) {
    return std::max(3 * modes_per_dim, 32);
}

Eigen::VectorXd project(const std::function<double(const double*)>& f, const SpectralBasis& basis,
                        int quad_points_per_dim) {
    if (quad_points_per_dim < 2 * basis.modes_per_dim)
        throw config_error("project: quadrature must use at least 2*modes_per_dim points per dim");
    const QuadratureRule rule = gauss_legendre(quad_points_per_dim);
    const Eigen::Index q = rule.nodes.size();
    const int n = basis.modes_per_dim;
    double point[3] = {0.0, 0.0, 0.0};
    if (basis.dim == 1) {
        Eigen::VectorXd vals(q);
        for (Eigen::Index a = 0; a < q; ++a) {
            point[0] = rule.nodes(a);
            vals(a) = f(point);
        }
        return sine_matrix(n, rule, true) * vals;
    }
    if (basis.dim == 2) {
        Eigen::MatrixXd vals(q, q);
        for (Eigen::Index a = 0; a < q; ++a) {
            point[0] = rule.nodes(a);
            for (Eigen::Index b = 0; b < q; ++b) {
                point[1] = rule.nodes(b);
                vals(a, b) = f(point);
            }
        }
        Eigen::MatrixXd sw = sine_matrix(n, rule, true);
        Eigen::MatrixXd ct = (sw * vals * sw.transpose()).transpose();
        return Eigen::Map<Eigen::VectorXd>(ct.data(), basis.size()); // (i,j) lexicographic
    }
    Eigen::MatrixXd sw = sine_matrix(n, rule, true);
    Eigen::VectorXd coeffs = Eigen::VectorXd::Zero(basis.size());
    Eigen::MatrixXd slab(q, q);
    for (Eigen::Index c3 = 0; c3 < q; ++c3) {
        point[2] = rule.nodes(c3);
        for (Eigen::Index a = 0; a < q; ++a) {
            point[0] = rule.nodes(a);
            for (Eigen::Index b = 0; b < q; ++b) {
                point[1] = rule.nodes(b);
                slab(a, b) = f(point);
            }
        }
        Eigen::MatrixXd g = sw * slab * sw.transpose(); // (i, j) sums for this x3 node
        for (int k = 0; k < n; ++k) {
            double s3 = std::sqrt(2.0) * std::sin((k + 1) * kPi * rule.nodes(c3)) * rule.weights(c3);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    coeffs((std::int64_t)i * n * n + (std::int64_t)j * n + k) += g(i, j) * s3;
        }
    }
    return coeffs;
}

double l2_norm(const Eigen::VectorXd& coeffs) {
    return coeffs.norm();
}

double sobolev_norm(const Eigen::VectorXd& coeffs, const SpectralBasis& basis, double order) {
    if (coeffs.size() != basis.size())
        throw shape_error("sobolev_norm: coefficient count does not match basis");
    if (order < 0.0)
        throw config_error("sobolev_norm: order must be nonnegative");
    return std::sqrt((basis.eigenvalues.array().pow(order) * coeffs.array().square()).sum());
}

namespace {

double bound_min_ratio(const SpectralBasis& basis, const Eigen::VectorXd& eigs) {
    const int d = basis.dim;
    const double ball[4] = {0.0, 2.0, kPi, 4.0 * kPi / 3.0};
    const double front = 4.0 * d * kPi * kPi / (d + 2);
    double min_ratio = std::numeric_limits<double>::infinity();
    for (std::int64_t rank = 0; rank < basis.size(); ++rank) {
        double lam = eigs(basis.by_eigenvalue[(size_t)rank]);
        double bound = front * std::pow((double)(rank + 1), 2.0 / d) *
                       std::pow(ball[d], -2.0 / d);
        min_ratio = std::min(min_ratio, lam / bound);
    }
    return min_ratio;
}

} // namespace

double eigenvalue_bound_min_ratio(const SpectralBasis& basis) {
    return bound_min_ratio(basis, basis.eigenvalues);
}

double eigenvalue_bound_min_ratio_fractional(const SpectralBasis& basis, double alpha) {
    check_alpha(alpha);
    Eigen::VectorXd eigs = fractional_eigenvalues(basis, alpha);
    return bound_min_ratio(basis, eigs);
}

} // namespace tfsde
