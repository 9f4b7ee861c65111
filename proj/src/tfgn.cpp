#include "tfgn.hpp"
#include "errors.hpp"
#include "rng.hpp"
#include "specfun.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <memory>

namespace tfsde {

static_assert(std::endian::native == std::endian::little,
              "table files are little-endian; big-endian hosts are unsupported");

void TemperingParams::validate() const {
    if (!(hurst > 0.0) || hurst == 0.5)
        throw config_error("hurst must satisfy H > 0 and H != 1/2");
    if (!(tempering > 0.0))
        throw config_error("tempering rate mu must be positive");
}

void TimeGrid::validate() const {
    if (!(horizon > 0.0))
        throw config_error("time grid horizon must be positive");
    if (steps < 1)
        throw config_error("time grid needs at least one increment");
}

namespace {

constexpr long double kPi = 3.14159265358979323846264338327950288L;

// C^2 as a function of y = mu*|t|; evaluated in long double because the two
// terms cancel almost exactly as y -> 0
long double c2_of_y(double H, long double y) {
    long double term1 = 2.0L * expl(lgammal(2.0L * H) - 2.0L * H * logl(2.0L * y));
    // scale the quadrature tolerance to the small-y magnitude of K_H
    long double k_mag = 0.5L * expl(lgammal((long double)H) + H * logl(2.0L / y));
    double tol = (double)(1e-15L * fmaxl(1.0L, k_mag));
    auto cfg = BesselEvalConfig::for_target(H, (double)y, tol);
    long double k = detail::bessel_k_ld(H, y, cfg);
    long double term2 =
        2.0L * expl(lgammal(H + 0.5L)) * k / (sqrtl(kPi) * powl(2.0L * y, (long double)H));
    return term1 - term2;
}

} // namespace

namespace detail {

long double v_variance_ld(const TemperingParams& params, long double t) {
    if (t == 0.0L) return 0.0L;
    long double at = fabsl(t);
    long double y = (long double)params.tempering * at;
    return c2_of_y(params.hurst, y) * powl(at, 2.0L * params.hurst);
}

} // namespace detail

double c_t_squared(const TemperingParams& params, double t) {
    params.validate();
    if (t == 0.0) return 0.0;
    return (double)c2_of_y(params.hurst, (long double)params.tempering * fabsl((long double)t));
}

double covariance(const TemperingParams& params, double t, double s) {
    params.validate();
    long double vt = detail::v_variance_ld(params, (long double)t);
    long double vs = detail::v_variance_ld(params, (long double)s);
    long double vd = detail::v_variance_ld(params, (long double)t - (long double)s);
    return (double)(0.5L * (vt + vs - vd));
}

IncrementCovariance increment_covariance(const TemperingParams& params, const TimeGrid& grid) {
    params.validate();
    grid.validate();
    const std::int64_t n = grid.steps;
    const long double dt = (long double)grid.horizon / n;
    std::vector<long double> v((size_t)n + 1);
    for (std::int64_t k = 0; k <= n; ++k)
        v[(size_t)k] = detail::v_variance_ld(params, k * dt);
    IncrementCovariance cov{grid, params, std::vector<double>((size_t)n)};
    cov.first_row[0] = (double)v[1];
    for (std::int64_t k = 1; k < n; ++k)
        cov.first_row[(size_t)k] =
            (double)(0.5L * (v[(size_t)k + 1] + v[(size_t)k - 1] - 2.0L * v[(size_t)k]));
    return cov;
}

CholeskyFactor cholesky(const IncrementCovariance& cov, double pivot_tol) {
    if (!(pivot_tol > 0.0))
        throw config_error("cholesky: pivot_tol must be positive");
    const std::int64_t n = cov.dim();
    using MatRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    MatRM l = MatRM::Zero(n, n);
    for (std::int64_t i = 0; i < n; ++i) {
        for (std::int64_t j = 0; j < i; ++j) {
            double s = cov.entry(i, j) - l.row(i).head(j).dot(l.row(j).head(j));
            l(i, j) = s / l(j, j);
        }
        double d = cov.entry(i, i) - l.row(i).head(i).squaredNorm();
        if (!(d > pivot_tol))
            throw factorization_error(
                "cholesky: pivot at or below tolerance at row " + std::to_string(i), (int)i);
        l(i, i) = std::sqrt(d);
    }
    return CholeskyFactor{cov.grid, cov.params, n, Eigen::MatrixXd(l)};
}

CholeskyFactor cholesky(const IncrementCovariance& cov) {
    return cholesky(cov, 1e-14 * cov.first_row[0]);
}

namespace detail {

IncrementTable transform_normals(const CholeskyFactor& factor, const Eigen::MatrixXd& normals,
                                 std::uint64_t seed) {
    if (normals.rows() != factor.dim)
        throw shape_error("sample_increments: normals/factor dimension mismatch");
    const std::int64_t n = factor.dim;
    const std::int64_t modes = normals.cols();
    const Eigen::MatrixXd& l = factor.lower;
    // accumulate y = L v in ascending column order of L with plain mul/add so
    // a row's bits depend only on its own normal column and the factor, never
    // on how many other modes share the table (nested tables gather rows
    // bitwise; blocked library products round differently per rhs width)
    IncrementTable table{factor.grid, factor.params, modes, seed, Eigen::MatrixXd(modes, n)};
    constexpr std::int64_t block = 8;
    Eigen::MatrixXd y(n, block);
    for (std::int64_t m0 = 0; m0 < modes; m0 += block) {
        const std::int64_t w = std::min(block, modes - m0);
        y.setZero();
        for (std::int64_t j = 0; j < n; ++j) {
            const std::int64_t len = n - j;
            for (std::int64_t c = 0; c < w; ++c)
                y.col(c).tail(len) += l.col(j).tail(len) * normals(j, m0 + c);
        }
        table.data.middleRows(m0, w) = y.leftCols(w).transpose();
    }
    return table;
}

} // namespace detail

IncrementTable sample_increments(const CholeskyFactor& factor, std::int64_t modes,
                                 std::uint64_t seed,
                                 const std::vector<std::uint64_t>& mode_keys) {
    if (modes < 1)
        throw config_error("sample_increments: need at least one mode");
    if (!mode_keys.empty() && (std::int64_t)mode_keys.size() != modes)
        throw shape_error("sample_increments: mode_keys length must match modes");
    const std::int64_t n = factor.dim;
    Eigen::MatrixXd v(n, modes);
    for (std::int64_t m = 0; m < modes; ++m) {
        std::uint64_t key = mode_keys.empty() ? (std::uint64_t)m : mode_keys[(size_t)m];
        NormalStream draw(mix_key(seed, key));
        for (std::int64_t k = 0; k < n; ++k) v(k, m) = draw();
    }
    return detail::transform_normals(factor, v, seed);
}

IncrementTable coarsen(const IncrementTable& table, std::int64_t ratio) {
    if (ratio < 1)
        throw config_error("coarsen: ratio must be a positive integer");
    if (table.grid.steps % ratio != 0)
        throw shape_error("coarsen: ratio does not divide the step count");
    if (ratio == 1) return table;
    const std::int64_t coarse_steps = table.grid.steps / ratio;
    IncrementTable out{TimeGrid{table.grid.horizon, coarse_steps}, table.params, table.modes,
                       table.seed, Eigen::MatrixXd(table.modes, coarse_steps)};
    for (std::int64_t j = 0; j < coarse_steps; ++j) {
        auto acc = out.data.col(j);
        acc = table.data.col(j * ratio);
        for (std::int64_t r = 1; r < ratio; ++r) acc += table.data.col(j * ratio + r);
    }
    return out;
}

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

void write_raw(std::FILE* f, const void* p, size_t bytes) {
    if (std::fwrite(p, 1, bytes, f) != bytes)
        throw error("table dump: short write");
}

void read_raw(std::FILE* f, void* p, size_t bytes) {
    if (std::fread(p, 1, bytes, f) != bytes)
        throw error("table load: short read");
}

} // namespace

void dump_table(const IncrementTable& table, const std::string& path) {
    FilePtr f(std::fopen(path.c_str(), "wb"));
    if (!f)
        throw error("table dump: cannot open " + path);
    double head_d[3] = {table.params.hurst, table.params.tempering, table.grid.horizon};
    std::uint64_t head_i[3] = {(std::uint64_t)table.grid.steps, (std::uint64_t)table.modes,
                               table.seed};
    write_raw(f.get(), head_d, sizeof head_d);
    write_raw(f.get(), head_i, sizeof head_i);
    std::vector<double> row((size_t)table.grid.steps);
    for (std::int64_t m = 0; m < table.modes; ++m) {
        Eigen::Map<Eigen::RowVectorXd>(row.data(), table.grid.steps) = table.data.row(m);
        write_raw(f.get(), row.data(), row.size() * sizeof(double));
    }
}

IncrementTable load_table(const std::string& path) {
    FilePtr f(std::fopen(path.c_str(), "rb"));
    if (!f)
        throw error("table load: cannot open " + path);
    double head_d[3];
    std::uint64_t head_i[3];
    read_raw(f.get(), head_d, sizeof head_d);
    read_raw(f.get(), head_i, sizeof head_i);
    TemperingParams params{head_d[0], head_d[1]};
    TimeGrid grid{head_d[2], (std::int64_t)head_i[0]};
    params.validate();
    grid.validate();
    const std::int64_t modes = (std::int64_t)head_i[1];
    if (modes < 1)
        throw error("table load: corrupt header");
    IncrementTable table{grid, params, modes, head_i[2], Eigen::MatrixXd(modes, grid.steps)};
    std::vector<double> row((size_t)grid.steps);
    for (std::int64_t m = 0; m < modes; ++m) {
        read_raw(f.get(), row.data(), row.size() * sizeof(double));
        table.data.row(m) = Eigen::Map<Eigen::RowVectorXd>(row.data(), grid.steps);
    }
    return table;
}

} // namespace tfsde
