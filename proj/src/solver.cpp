#include "solver.hpp"
#include "errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

namespace tfsde {

Eigen::VectorXd NoiseSpec::sigma_for(const SpectralBasis& basis) const {
    Eigen::VectorXd cap = basis.eigenvalues.array().pow(-rho);
    if (sigma_override.size() == 0) return cap;
    if (sigma_override.size() != basis.size())
        throw shape_error("noise amplitudes do not match basis size");
    if ((sigma_override.array().abs() > cap.array() * (1.0 + 1e-12)).any())
        throw config_error("noise amplitudes exceed the lambda^{-rho} bound");
    return sigma_override;
}

void ModelConfig::validate() const {
    if (!(alpha > 0.0) || !(alpha < 1.0))
        throw config_error("alpha must lie in (0, 1)");
    if (!(horizon > 0.0))
        throw config_error("horizon must be positive");
    if (conv_substep_ratio < 1)
        throw config_error("conv_substep_ratio must be a positive integer");
    if (!(noise.rho >= 0.0))
        throw config_error("rho must be nonnegative");
}

Eigen::VectorXd convolution_step(const Eigen::VectorXd& conv, const Eigen::VectorXd& increment,
                                 const Eigen::VectorXd& frac_eigs, const Eigen::VectorXd& sigma,
                                 double dt_conv) {
    auto n = conv.size();
    if (increment.size() != n || frac_eigs.size() != n || sigma.size() != n)
        throw shape_error("convolution_step: vector sizes differ");
    return ((-frac_eigs.array() * dt_conv).exp() *
            (conv.array() + sigma.array() * increment.array()))
        .matrix();
}

Eigen::VectorXd apply_forcing(const Eigen::VectorXd& u, const Forcing& forcing,
                              const SpectralBasis& basis) {
    switch (forcing.kind) {
    case ForcingKind::zero:
        return Eigen::VectorXd::Zero(u.size());
    case ForcingKind::linear_identity:
        return u;
    case ForcingKind::pointwise:
        break;
    }
    if (!forcing.fn)
        throw config_error("pointwise forcing needs a callable");
    int q = forcing.quad_points > 0 ? forcing.quad_points
                                    : default_quad_points(basis.modes_per_dim);
    if (q < 2 * basis.modes_per_dim)
        throw config_error("pointwise forcing quadrature below the 2N floor");
    const auto& fn = forcing.fn;
    Eigen::VectorXd coeffs = u;
    return project(
        [&](const double* x) { return fn(evaluate_field(basis, coeffs, x)); }, basis, q);
}

ModalState semi_implicit_step(const ModalState& state, const Eigen::VectorXd& conv_next,
                              const Eigen::VectorXd& frac_eigs, double tau, const Forcing& forcing,
                              const SpectralBasis& basis) {
    auto n = state.z.size();
    if (conv_next.size() != n || frac_eigs.size() != n)
        throw shape_error("semi_implicit_step: vector sizes differ");
    Eigen::VectorXd fhat = apply_forcing(state.u, forcing, basis);
    ModalState next;
    next.time_index = state.time_index + 1;
    next.z = ((state.z.array() + tau * fhat.array()) / (1.0 + tau * frac_eigs.array())).matrix();
    next.conv = conv_next;
    next.u = next.z + next.conv;
    return next;
}

Eigen::VectorXd naive_step(const Eigen::VectorXd& u, const Eigen::VectorXd& increment,
                           const Eigen::VectorXd& frac_eigs, const Eigen::VectorXd& sigma,
                           double tau, const Forcing& forcing, const SpectralBasis& basis) {
    auto n = u.size();
    if (increment.size() != n || frac_eigs.size() != n || sigma.size() != n)
        throw shape_error("naive_step: vector sizes differ");
    Eigen::VectorXd fhat = apply_forcing(u, forcing, basis);
    return ((u.array() + tau * fhat.array() + sigma.array() * increment.array()) /
            (1.0 + tau * frac_eigs.array()))
        .matrix();
}

Trajectory solve_path(const ModelConfig& config, const SpectralBasis& basis,
                      const Eigen::VectorXd& u0, const IncrementTable& increments,
                      const SolveOptions& options) {
    config.validate();
    const std::int64_t n = basis.size();
    if (u0.size() != n)
        throw shape_error("solve_path: initial coefficients do not match basis");
    if (increments.modes < n)
        throw shape_error("solve_path: increment table has fewer rows than basis modes");
    const std::int64_t ratio = config.conv_substep_ratio;
    if (increments.grid.steps % ratio != 0)
        throw shape_error("solve_path: table steps not a multiple of conv_substep_ratio");
    if (std::fabs(increments.grid.horizon - config.horizon) >
        1e-9 * std::max(1.0, config.horizon))
        throw shape_error("solve_path: table horizon differs from model horizon");
    const std::int64_t m_steps = increments.grid.steps / ratio;
    const double tau = config.horizon / (double)m_steps;
    const double dt_conv = tau / (double)ratio;

    std::vector<std::int64_t> snaps = options.snapshots;
    if (snaps.empty()) {
        snaps.resize((size_t)m_steps + 1);
        for (std::int64_t i = 0; i <= m_steps; ++i) snaps[(size_t)i] = i;
    } else {
        std::sort(snaps.begin(), snaps.end());
        snaps.erase(std::unique(snaps.begin(), snaps.end()), snaps.end());
        if (snaps.front() < 0 || snaps.back() > m_steps)
            throw shape_error("solve_path: snapshot index outside 0..steps");
    }

    Eigen::VectorXd frac = fractional_eigenvalues(basis, config.alpha);
    Eigen::VectorXd sigma = config.noise.sigma_for(basis);
    Eigen::ArrayXd decay = (-frac.array() * dt_conv).exp();
    Eigen::ArrayXd den = 1.0 / (1.0 + tau * frac.array());

    Trajectory traj;
    traj.snapshot_indices = snaps;
    traj.alpha = config.alpha;
    traj.horizon = config.horizon;
    traj.steps = m_steps;
    traj.noise_seed = increments.seed;
    traj.states.reserve(snaps.size());

    ModalState cur;
    cur.time_index = 0;
    cur.z = u0;
    cur.conv = Eigen::VectorXd::Zero(n);
    cur.u = u0;
    size_t snap_pos = 0;
    auto record = [&](const ModalState& s) {
        while (snap_pos < snaps.size() && snaps[snap_pos] == s.time_index) {
            traj.states.push_back(s);
            ++snap_pos;
        }
    };
    record(cur);

    Eigen::VectorXd coarse_inc(n);
    for (std::int64_t m = 0; m < m_steps; ++m) {
        if (config.naive_scheme) {
            coarse_inc = increments.data.col(m * ratio).head(n);
            for (std::int64_t r = 1; r < ratio; ++r)
                coarse_inc += increments.data.col(m * ratio + r).head(n);
            Eigen::VectorXd fhat = apply_forcing(cur.u, config.forcing, basis);
            cur.u = (den * (cur.u.array() + tau * fhat.array() +
                            sigma.array() * coarse_inc.array()))
                        .matrix();
            cur.z = cur.u; // convolution split not tracked by this scheme
            cur.conv.setZero();
            cur.time_index = m + 1;
        } else {
            Eigen::ArrayXd conv = cur.conv.array();
            for (std::int64_t r = 0; r < ratio; ++r)
                conv = decay *
                       (conv + sigma.array() *
                                   increments.data.col(m * ratio + r).head(n).array());
            Eigen::VectorXd fhat = apply_forcing(cur.u, config.forcing, basis);
            cur.z = (den * (cur.z.array() + tau * fhat.array())).matrix();
            cur.conv = conv.matrix();
            cur.u = cur.z + cur.conv;
            cur.time_index = m + 1;
        }
        record(cur);
    }
    return traj;
}

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

} // namespace

void export_trajectory_csv(const Trajectory& traj, const SpectralBasis& basis,
                           const std::string& path) {
    FilePtr f(std::fopen(path.c_str(), "w"));
    if (!f)
        throw error("trajectory export: cannot open " + path);
    std::fprintf(f.get(), "time_index,i1,i2,i3,z,conv,u\n");
    for (const auto& s : traj.states)
        for (std::int64_t m = 0; m < basis.size(); ++m) {
            const auto& mode = basis.modes[(size_t)m];
            std::fprintf(f.get(), "%lld,%d,%d,%d,%.17g,%.17g,%.17g\n", (long long)s.time_index,
                         mode[0], mode[1], mode[2], s.z(m), s.conv(m), s.u(m));
        }
}

void export_trajectory_binary(const Trajectory& traj, const std::string& path) {
    FilePtr f(std::fopen(path.c_str(), "wb"));
    if (!f)
        throw error("trajectory export: cannot open " + path);
    auto put = [&](const void* p, size_t bytes) {
        if (std::fwrite(p, 1, bytes, f.get()) != bytes)
            throw error("trajectory export: short write");
    };
    const std::int64_t n = traj.states.empty() ? 0 : traj.states[0].u.size();
    double head_d[2] = {traj.alpha, traj.horizon};
    std::uint64_t head_i[4] = {(std::uint64_t)traj.steps, (std::uint64_t)n,
                               (std::uint64_t)traj.states.size(), traj.noise_seed};
    put(head_d, sizeof head_d);
    put(head_i, sizeof head_i);
    for (const auto& s : traj.states) {
        std::uint64_t ti = (std::uint64_t)s.time_index;
        put(&ti, sizeof ti);
        put(s.z.data(), sizeof(double) * (size_t)n);
        put(s.conv.data(), sizeof(double) * (size_t)n);
        put(s.u.data(), sizeof(double) * (size_t)n);
    }
}

} // namespace tfsde
