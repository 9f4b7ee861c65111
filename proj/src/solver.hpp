#pragma once
#include "spectral.hpp"
#include "tfgn.hpp"

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <vector>

namespace tfsde {

enum class ForcingKind { zero, linear_identity, pointwise };

struct Forcing {
    ForcingKind kind = ForcingKind::linear_identity;
    std::function<double(double)> fn; // pointwise only
    int quad_points = 0;              // pointwise only; 0 = default rule
};

struct NoiseSpec {
    double rho = 0.75;
    Eigen::VectorXd sigma_override; // empty = lambda^{-rho}
    // per-mode amplitudes; overrides must respect |sigma| <= lambda^{-rho}
    Eigen::VectorXd sigma_for(const SpectralBasis& basis) const;
};

struct ModelConfig {
    double alpha = 0.5;
    double horizon = 1.0;
    Forcing forcing;
    NoiseSpec noise;
    std::int64_t conv_substep_ratio = 1; // convolution grid = tau / ratio
    bool naive_scheme = false;           // diagnostic integrator, see naive_step
    void validate() const;
};

struct ModalState {
    std::int64_t time_index;
    Eigen::VectorXd z;
    Eigen::VectorXd conv;
    Eigen::VectorXd u; // always z + conv
};

struct Trajectory {
    std::vector<ModalState> states; // at snapshot indices, ascending
    std::vector<std::int64_t> snapshot_indices;
    double alpha;
    double horizon;
    std::int64_t steps;
    std::uint64_t noise_seed;
    const ModalState& terminal() const { return states.back(); }
};

struct SolveOptions {
    std::vector<std::int64_t> snapshots; // empty = every step
};

// one convolution update: conv' = exp(-lambda^alpha dt) * (conv + sigma dB);
// iterating reproduces the left-point convolution sum exactly
Eigen::VectorXd convolution_step(const Eigen::VectorXd& conv, const Eigen::VectorXd& increment,
                                 const Eigen::VectorXd& frac_eigs, const Eigen::VectorXd& sigma,
                                 double dt_conv);

// z' = (z + tau f(u)) / (1 + tau lambda^alpha), u' = z' + conv_next
ModalState semi_implicit_step(const ModalState& state, const Eigen::VectorXd& conv_next,
                              const Eigen::VectorXd& frac_eigs, double tau, const Forcing& forcing,
                              const SpectralBasis& basis);

// u' = (u + tau f(u) + sigma dB) / (1 + tau lambda^alpha); breaks down for
// rough noise, kept as a diagnostic
Eigen::VectorXd naive_step(const Eigen::VectorXd& u, const Eigen::VectorXd& increment,
                           const Eigen::VectorXd& frac_eigs, const Eigen::VectorXd& sigma,
                           double tau, const Forcing& forcing, const SpectralBasis& basis);

Eigen::VectorXd apply_forcing(const Eigen::VectorXd& u, const Forcing& forcing,
                              const SpectralBasis& basis);

// march the full scheme; table must carry steps = M * conv_substep_ratio
// increments for M solver steps, rows aligned with the basis enumeration
Trajectory solve_path(const ModelConfig& config, const SpectralBasis& basis,
                      const Eigen::VectorXd& u0, const IncrementTable& increments,
                      const SolveOptions& options = {});

void export_trajectory_csv(const Trajectory& traj, const SpectralBasis& basis,
                           const std::string& path);
void export_trajectory_binary(const Trajectory& traj, const std::string& path);

} // namespace tfsde
