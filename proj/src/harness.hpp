#pragma once
#include "solver.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace tfsde {

struct RateModel {
    double alpha;
    double hurst;
    double rho;
    double min_h1() const { return hurst < 1.0 ? hurst : 1.0; }
    double gamma() const { return 2.0 * rho - 1.0 + 2.0 * alpha * min_h1(); }
    double temporal_rate() const { return rho > 0.5 ? min_h1() : gamma() / (2.0 * alpha); }
    double spatial_rate() const { return gamma(); }
};

enum class PlanMode { temporal, spatial, holder };

struct ExperimentPlan {
    PlanMode mode = PlanMode::temporal;
    double alpha = 0.5;
    double hurst = 0.4;
    double mu = 1.0;
    double rho = 0.75;
    double horizon = 0.5;
    std::vector<std::int64_t> ladder;    // M values (temporal) or N values (spatial)
    std::int64_t modes_per_dim = 20;     // N, fixed in temporal/holder runs
    std::int64_t steps = 1000;           // M, fixed in spatial runs; fine M for holder
    std::int64_t trajectories = 200;     // K
    std::uint64_t master_seed = 1;
    std::int64_t conv_substep_ratio = 1;
    std::vector<std::int64_t> holder_lags; // in units of the fine step
    bool zero_noise = false;               // diagnostic: sigma forced to 0
    bool zero_forcing = false;             // diagnostic: f forced to 0
    std::string output;
    std::string preset_name;

    void validate() const;
    TemperingParams tempering() const { return TemperingParams{hurst, mu}; }
    RateModel rates() const { return RateModel{alpha, hurst, rho}; }
};

struct RungStat {
    std::int64_t resolution;
    double error;
    double rate; // NaN on the first rung
    double se;
};

struct RateReport {
    ExperimentPlan plan;
    std::vector<RungStat> rungs;
    double predicted_rate;
    double gamma;
    bool gamma_warning; // gamma <= 0: outside the theory's standing condition
    double wall_seconds;
};

struct HolderLag {
    std::int64_t lag_steps;
    double lag_time;
    double mean_sq;
    double se;
};

struct HolderReport {
    ExperimentPlan plan;
    std::vector<HolderLag> lags;
    double estimate; // slope/2 of ln mean_sq vs ln lag
    double target;   // min(H, 1)
    double wall_seconds;
};

// ln(e_prev/e_next)/ln(1.5): positive when errors decrease
double convergence_rate(double e_prev, double e_next);

// coefficients of the experiments' initial surface x1^2 x2^2 on a 2-d basis
Eigen::VectorXd default_initial_coeffs(const SpectralBasis& basis);

// root-mean-square terminal difference between two resolutions driven by the
// same per-trajectory noise (temporal: coarsened views of one fine table;
// spatial: nested bases sharing per-mode rows)
double mc_error(const ExperimentPlan& plan, std::int64_t res_a, std::int64_t res_b);

// single-trajectory squared terminal difference from caller-supplied tables;
// rejects tables that are not coarsened views of one realization
double coupled_pair_sq_error(const ExperimentPlan& plan, std::int64_t m_a,
                             const IncrementTable& table_a, std::int64_t m_b,
                             const IncrementTable& table_b);

RateReport run_temporal_table(const ExperimentPlan& plan);
RateReport run_spatial_table(const ExperimentPlan& plan);
HolderReport holder_exponent(const ExperimentPlan& plan);

ExperimentPlan preset(const std::string& name);
// flat key-value file (alpha, hurst, mu, rho, horizon, modes_per_dim, steps,
// trajectories, seed, preset, output; extensions: mode, ladder, lags,
// conv_substep_ratio); a preset key is applied first, other keys override
ExperimentPlan plan_from_file(const std::string& path);
void plan_set(ExperimentPlan& plan, const std::string& key, const std::string& value);
std::string plan_get(const ExperimentPlan& plan, const std::string& key);

void write_rate_csv(const RateReport& report, const std::string& path);
void write_rate_json(const RateReport& report, const std::string& path);
void write_holder_csv(const HolderReport& report, const std::string& path);
void write_holder_json(const HolderReport& report, const std::string& path);

int worker_count(); // TFSDE_THREADS override, else hardware concurrency
double pairwise_sum(const double* v, std::int64_t n);

} // namespace tfsde
