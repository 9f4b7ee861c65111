#pragma once
#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace tfsde {

struct TemperingParams {
    double hurst;     // H > 0, H != 1/2
    double tempering; // mu > 0
    void validate() const;
};

struct TimeGrid {
    double horizon;     // T
    std::int64_t steps; // number of increments
    double dt() const { return horizon / (double)steps; }
    void validate() const;
};

// E[beta(t) beta(s)] and the variance prefactor C_t^2
double c_t_squared(const TemperingParams& params, double t);
double covariance(const TemperingParams& params, double t, double s);

// Toeplitz covariance of the increment vector on a uniform grid
struct IncrementCovariance {
    TimeGrid grid;
    TemperingParams params;
    std::vector<double> first_row; // length steps
    std::int64_t dim() const { return (std::int64_t)first_row.size(); }
    double entry(std::int64_t i, std::int64_t j) const {
        return first_row[(size_t)(i > j ? i - j : j - i)];
    }
};

IncrementCovariance increment_covariance(const TemperingParams& params, const TimeGrid& grid);

struct CholeskyFactor {
    TimeGrid grid;
    TemperingParams params;
    std::int64_t dim;
    Eigen::MatrixXd lower;
};

// row recurrence; pivot <= pivot_tol raises factorization_error with the row
CholeskyFactor cholesky(const IncrementCovariance& cov, double pivot_tol);
CholeskyFactor cholesky(const IncrementCovariance& cov); // pivot_tol = 1e-14 * first_row[0]

struct IncrementTable {
    TimeGrid grid;
    TemperingParams params;
    std::int64_t modes;
    std::uint64_t seed;
    Eigen::MatrixXd data; // modes x steps; column k = all modes at step k
};

// per-mode rows Z = L*V; stream for row m keyed by (seed, mode_keys[m]),
// mode_keys defaulting to the row index
IncrementTable sample_increments(const CholeskyFactor& factor, std::int64_t modes,
                                 std::uint64_t seed,
                                 const std::vector<std::uint64_t>& mode_keys = {});

// block-sum increments onto a grid with steps/ratio increments
IncrementTable coarsen(const IncrementTable& table, std::int64_t ratio);

void dump_table(const IncrementTable& table, const std::string& path);
IncrementTable load_table(const std::string& path);

namespace detail {
long double v_variance_ld(const TemperingParams& params, long double t); // C_t^2 * t^{2H}
// Z = L * normals, normals given column-per-mode (steps x modes)
IncrementTable transform_normals(const CholeskyFactor& factor, const Eigen::MatrixXd& normals,
                                 std::uint64_t seed);
} // namespace detail

} // namespace tfsde
