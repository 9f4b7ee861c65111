#include "tfsde.h"

#include "errors.hpp"
#include "harness.hpp"
#include "specfun.hpp"

#include <cmath>
#include <cstring>
#include <string>

namespace {

thread_local std::string g_last_error = "no error";

tfsde_status fail(tfsde_status code, const char* what) {
    g_last_error = what;
    return code;
}

template <typename F>
tfsde_status guard(F&& f) {
    try {
        f();
        return TFSDE_OK;
    } catch (const tfsde::config_error& e) {
        return fail(TFSDE_ERR_CONFIG, e.what());
    } catch (const tfsde::shape_error& e) {
        return fail(TFSDE_ERR_SHAPE, e.what());
    } catch (const tfsde::accuracy_error& e) {
        return fail(TFSDE_ERR_ACCURACY, e.what());
    } catch (const tfsde::factorization_error& e) {
        return fail(TFSDE_ERR_FACTORIZATION, e.what());
    } catch (const tfsde::protocol_error& e) {
        return fail(TFSDE_ERR_PROTOCOL, e.what());
    } catch (const tfsde::degenerate_error& e) {
        return fail(TFSDE_ERR_DEGENERATE, e.what());
    } catch (const std::exception& e) {
        return fail(TFSDE_ERR_RUNTIME, e.what());
    } catch (...) {
        return fail(TFSDE_ERR_RUNTIME, "unknown error");
    }
}

tfsde_status need(bool ok, const char* what) {
    if (ok) return TFSDE_OK;
    return fail(TFSDE_ERR_CONFIG, what);
}

} // namespace

struct tfsde_table {
    tfsde::IncrementTable impl;
};
struct tfsde_basis {
    tfsde::SpectralBasis impl;
};
struct tfsde_solution {
    tfsde::Trajectory impl;
};
struct tfsde_plan {
    tfsde::ExperimentPlan impl;
};
struct tfsde_report {
    bool is_holder;
    tfsde::RateReport rate;
    tfsde::HolderReport holder;
};

extern "C" {

const char* tfsde_last_error(void) { return g_last_error.c_str(); }

tfsde_status tfsde_ln_gamma(double x, double* out) {
    if (need(out != nullptr, "null output pointer")) return TFSDE_ERR_CONFIG;
    return guard([&] { *out = tfsde::ln_gamma(x); });
}

tfsde_status tfsde_bessel_k(double order, double y, double abs_tol, double* out) {
    if (need(out != nullptr, "null output pointer")) return TFSDE_ERR_CONFIG;
    return guard([&] {
        if (!(abs_tol > 0)) throw tfsde::config_error("abs_tol must be positive");
        *out = tfsde::bessel_k(order, y, tfsde::BesselEvalConfig::for_target(order, y, abs_tol));
    });
}

tfsde_status tfsde_c_t_squared(double hurst, double mu, double t, double* out) {
    if (need(out != nullptr, "null output pointer")) return TFSDE_ERR_CONFIG;
    return guard([&] { *out = tfsde::c_t_squared({hurst, mu}, t); });
}

tfsde_status tfsde_covariance(double hurst, double mu, double t, double s, double* out) {
    if (need(out != nullptr, "null output pointer")) return TFSDE_ERR_CONFIG;
    return guard([&] { *out = tfsde::covariance({hurst, mu}, t, s); });
}

tfsde_status tfsde_table_sample(double hurst, double mu, double horizon, int64_t steps,
                                int64_t modes, uint64_t seed, tfsde_table** out) {
    if (need(out != nullptr, "null output pointer")) return TFSDE_ERR_CONFIG;
    *out = nullptr;
    return guard([&] {
        tfsde::TemperingParams params{hurst, mu};
        tfsde::TimeGrid grid{horizon, steps};
        params.validate();
        grid.validate();
        if (modes < 1) throw tfsde::config_error("modes must be >= 1");
        tfsde::CholeskyFactor factor = tfsde::cholesky(tfsde::increment_covariance(params, grid));
        *out = new tfsde_table{tfsde::sample_increments(factor, modes, seed)};
    });
}

tfsde_status tfsde_table_coarsen(const tfsde_table* table, int64_t ratio, tfsde_table** out) {
    if (need(table != nullptr && out != nullptr, "null pointer")) return TFSDE_ERR_CONFIG;
    *out = nullptr;
    return guard([&] { *out = new tfsde_table{tfsde::coarsen(table->impl, ratio)}; });
}

tfsde_status tfsde_table_dump(const tfsde_table* table, const char* path) {
    if (need(table != nullptr && path != nullptr, "null pointer")) return TFSDE_ERR_CONFIG;
    return guard([&] { tfsde::dump_table(table->impl, path); });
}

tfsde_status tfsde_table_load(const char* path, tfsde_table** out) {
    if (need(path != nullptr && out != nullptr, "null pointer")) return TFSDE_ERR_CONFIG;
    *out = nullptr;
    return guard([&] { *out = new tfsde_table{tfsde::load_table(path)}; });
}

tfsde_status tfsde_table_info(const tfsde_table* table, double* hurst, double* mu, double* horizon,
                              int64_t* steps, int64_t* modes, uint64_t* seed) {
    if (need(table != nullptr, "null table")) return TFSDE_ERR_CONFIG;
    if (hurst) *hurst = table->impl.params.hurst;
    if (mu) *mu = table->impl.params.tempering;
    if (horizon) *horizon = table->impl.grid.horizon;
    if (steps) *steps = table->impl.grid.steps;
    if (modes) *modes = table->impl.modes;
    if (seed) *seed = table->impl.seed;
    return TFSDE_OK;
}

tfsde_status tfsde_table_row(const tfsde_table* table, int64_t mode, double* out) {
    if (need(table != nullptr && out != nullptr, "null pointer")) return TFSDE_ERR_CONFIG;
    return guard([&] {
        if (mode < 0 || mode >= table->impl.modes)
            throw tfsde::shape_error("mode index out of range");
        for (int64_t k = 0; k < table->impl.grid.steps; ++k) out[k] = table->impl.data(mode, k);
    });
}

void tfsde_table_free(tfsde_table* table) { delete table; }

tfsde_status tfsde_basis_create(int dim, int modes_per_dim, tfsde_basis** out) {
    if (need(out != nullptr, "null output pointer")) return TFSDE_ERR_CONFIG;
    *out = nullptr;
    return guard([&] { *out = new tfsde_basis{tfsde::build_basis(dim, modes_per_dim)}; });
}

tfsde_status tfsde_basis_size(const tfsde_basis* basis, int64_t* out) {
    if (need(basis != nullptr && out != nullptr, "null pointer")) return TFSDE_ERR_CONFIG;
    *out = basis->impl.size();
    return TFSDE_OK;
}

tfsde_status tfsde_basis_eigenvalue(const tfsde_basis* basis, int64_t index, double* out) {
    if (need(basis != nullptr && out != nullptr, "null pointer")) return TFSDE_ERR_CONFIG;
    return guard([&] {
        if (index < 0 || index >= basis->impl.size())
            throw tfsde::shape_error("mode index out of range");
        *out = basis->impl.eigenvalues[index];
    });
}

tfsde_status tfsde_basis_mode(const tfsde_basis* basis, int64_t index, int* i1, int* i2, int* i3) {
    if (need(basis != nullptr, "null basis")) return TFSDE_ERR_CONFIG;
    return guard([&] {
        if (index < 0 || index >= basis->impl.size())
            throw tfsde::shape_error("mode index out of range");
        const auto& m = basis->impl.modes[(size_t)index];
        if (i1) *i1 = m[0];
        if (i2) *i2 = m[1];
        if (i3) *i3 = m[2];
    });
}

tfsde_status tfsde_basis_project(const tfsde_basis* basis,
                                 double (*f)(const double* point, void* ctx), void* ctx,
                                 int quad_points_per_dim, double* coeffs) {
    if (need(basis != nullptr && f != nullptr && coeffs != nullptr, "null pointer"))
        return TFSDE_ERR_CONFIG;
    return guard([&] {
        int quad = quad_points_per_dim > 0 ? quad_points_per_dim
                                           : tfsde::default_quad_points(basis->impl.modes_per_dim);
        Eigen::VectorXd c =
            tfsde::project([&](const double* x) { return f(x, ctx); }, basis->impl, quad);
        std::memcpy(coeffs, c.data(), sizeof(double) * (size_t)c.size());
    });
}

tfsde_status tfsde_basis_min_bound_ratio(const tfsde_basis* basis, double* out) {
    if (need(basis != nullptr && out != nullptr, "null pointer")) return TFSDE_ERR_CONFIG;
    return guard([&] { *out = tfsde::eigenvalue_bound_min_ratio(basis->impl); });
}

void tfsde_basis_free(tfsde_basis* basis) { delete basis; }

tfsde_status tfsde_solve(const tfsde_model* model, const tfsde_basis* basis, const double* u0,
                         const tfsde_table* increments, const int64_t* snapshots,
                         int64_t n_snapshots, tfsde_solution** out) {
    if (need(model != nullptr && basis != nullptr && increments != nullptr && out != nullptr,
             "null pointer"))
        return TFSDE_ERR_CONFIG;
    *out = nullptr;
    return guard([&] {
        tfsde::ModelConfig config;
        config.alpha = model->alpha;
        config.horizon = model->horizon;
        config.forcing.kind =
            model->zero_forcing ? tfsde::ForcingKind::zero : tfsde::ForcingKind::linear_identity;
        config.noise.rho = model->rho;
        if (model->sigma) {
            if (model->sigma_len != basis->impl.size())
                throw tfsde::shape_error("sigma length does not match the basis size");
            config.noise.sigma_override =
                Eigen::Map<const Eigen::VectorXd>(model->sigma, model->sigma_len);
        }
        config.conv_substep_ratio = model->conv_substep_ratio;
        config.naive_scheme = model->naive_scheme != 0;
        Eigen::VectorXd coeffs;
        if (u0) {
            coeffs = Eigen::Map<const Eigen::VectorXd>(u0, basis->impl.size());
        } else {
            if (basis->impl.dim != 2)
                throw tfsde::config_error("the built-in initial surface is 2-d; pass u0");
            coeffs = tfsde::default_initial_coeffs(basis->impl);
        }
        tfsde::SolveOptions options;
        if (snapshots && n_snapshots > 0)
            options.snapshots.assign(snapshots, snapshots + n_snapshots);
        else if (n_snapshots < 0)
            throw tfsde::config_error("n_snapshots must be >= 0");
        *out = new tfsde_solution{
            tfsde::solve_path(config, basis->impl, coeffs, increments->impl, options)};
    });
}

tfsde_status tfsde_solution_count(const tfsde_solution* sol, int64_t* out) {
    if (need(sol != nullptr && out != nullptr, "null pointer")) return TFSDE_ERR_CONFIG;
    *out = (int64_t)sol->impl.states.size();
    return TFSDE_OK;
}

tfsde_status tfsde_solution_index(const tfsde_solution* sol, int64_t snapshot,
                                  int64_t* time_index) {
    if (need(sol != nullptr && time_index != nullptr, "null pointer")) return TFSDE_ERR_CONFIG;
    return guard([&] {
        if (snapshot < 0 || snapshot >= (int64_t)sol->impl.states.size())
            throw tfsde::shape_error("snapshot index out of range");
        *time_index = sol->impl.states[(size_t)snapshot].time_index;
    });
}

tfsde_status tfsde_solution_values(const tfsde_solution* sol, int64_t snapshot, double* z,
                                   double* conv, double* u) {
    if (need(sol != nullptr, "null solution")) return TFSDE_ERR_CONFIG;
    return guard([&] {
        if (snapshot < 0 || snapshot >= (int64_t)sol->impl.states.size())
            throw tfsde::shape_error("snapshot index out of range");
        const tfsde::ModalState& s = sol->impl.states[(size_t)snapshot];
        const size_t bytes = sizeof(double) * (size_t)s.u.size();
        if (z) std::memcpy(z, s.z.data(), bytes);
        if (conv) std::memcpy(conv, s.conv.data(), bytes);
        if (u) std::memcpy(u, s.u.data(), bytes);
    });
}

tfsde_status tfsde_solution_export_csv(const tfsde_solution* sol, const tfsde_basis* basis,
                                       const char* path) {
    if (need(sol != nullptr && basis != nullptr && path != nullptr, "null pointer"))
        return TFSDE_ERR_CONFIG;
    return guard([&] { tfsde::export_trajectory_csv(sol->impl, basis->impl, path); });
}

tfsde_status tfsde_solution_export_binary(const tfsde_solution* sol, const char* path) {
    if (need(sol != nullptr && path != nullptr, "null pointer")) return TFSDE_ERR_CONFIG;
    return guard([&] { tfsde::export_trajectory_binary(sol->impl, path); });
}

void tfsde_solution_free(tfsde_solution* sol) { delete sol; }

tfsde_status tfsde_plan_default(tfsde_plan** out) {
    if (need(out != nullptr, "null output pointer")) return TFSDE_ERR_CONFIG;
    *out = nullptr;
    return guard([&] { *out = new tfsde_plan{}; });
}

tfsde_status tfsde_plan_preset(const char* name, tfsde_plan** out) {
    if (need(name != nullptr && out != nullptr, "null pointer")) return TFSDE_ERR_CONFIG;
    *out = nullptr;
    return guard([&] { *out = new tfsde_plan{tfsde::preset(name)}; });
}

tfsde_status tfsde_plan_load(const char* path, tfsde_plan** out) {
    if (need(path != nullptr && out != nullptr, "null pointer")) return TFSDE_ERR_CONFIG;
    *out = nullptr;
    return guard([&] { *out = new tfsde_plan{tfsde::plan_from_file(path)}; });
}

tfsde_status tfsde_plan_set(tfsde_plan* plan, const char* key, const char* value) {
    if (need(plan != nullptr && key != nullptr && value != nullptr, "null pointer"))
        return TFSDE_ERR_CONFIG;
    return guard([&] { tfsde::plan_set(plan->impl, key, value); });
}

tfsde_status tfsde_plan_get(const tfsde_plan* plan, const char* key, char* buf, size_t buf_len) {
    if (need(plan != nullptr && key != nullptr && buf != nullptr, "null pointer"))
        return TFSDE_ERR_CONFIG;
    return guard([&] {
        std::string v = tfsde::plan_get(plan->impl, key);
        if (v.size() + 1 > buf_len) throw tfsde::shape_error("plan_get buffer too small");
        std::memcpy(buf, v.c_str(), v.size() + 1);
    });
}

void tfsde_plan_free(tfsde_plan* plan) { delete plan; }

tfsde_status tfsde_run_table(const tfsde_plan* plan, tfsde_report** out) {
    if (need(plan != nullptr && out != nullptr, "null pointer")) return TFSDE_ERR_CONFIG;
    *out = nullptr;
    return guard([&] {
        auto rep = new tfsde_report{};
        rep->is_holder = false;
        try {
            rep->rate = plan->impl.mode == tfsde::PlanMode::spatial
                            ? tfsde::run_spatial_table(plan->impl)
                            : tfsde::run_temporal_table(plan->impl);
        } catch (...) {
            delete rep;
            throw;
        }
        *out = rep;
    });
}

tfsde_status tfsde_run_holder(const tfsde_plan* plan, tfsde_report** out) {
    if (need(plan != nullptr && out != nullptr, "null pointer")) return TFSDE_ERR_CONFIG;
    *out = nullptr;
    return guard([&] {
        auto rep = new tfsde_report{};
        rep->is_holder = true;
        try {
            rep->holder = tfsde::holder_exponent(plan->impl);
        } catch (...) {
            delete rep;
            throw;
        }
        *out = rep;
    });
}

tfsde_status tfsde_report_rung_count(const tfsde_report* report, int64_t* out) {
    if (need(report != nullptr && out != nullptr, "null pointer")) return TFSDE_ERR_CONFIG;
    *out = report->is_holder ? (int64_t)report->holder.lags.size()
                             : (int64_t)report->rate.rungs.size();
    return TFSDE_OK;
}

tfsde_status tfsde_report_rung(const tfsde_report* report, int64_t index, int64_t* resolution,
                               double* error, double* rate, double* se) {
    if (need(report != nullptr, "null report")) return TFSDE_ERR_CONFIG;
    return guard([&] {
        if (report->is_holder)
            throw tfsde::shape_error("rung accessors apply to convergence reports");
        if (index < 0 || index >= (int64_t)report->rate.rungs.size())
            throw tfsde::shape_error("rung index out of range");
        const tfsde::RungStat& r = report->rate.rungs[(size_t)index];
        if (resolution) *resolution = r.resolution;
        if (error) *error = r.error;
        if (rate) *rate = r.rate;
        if (se) *se = r.se;
    });
}

tfsde_status tfsde_report_predicted_rate(const tfsde_report* report, double* out) {
    if (need(report != nullptr && out != nullptr, "null pointer")) return TFSDE_ERR_CONFIG;
    return guard([&] {
        if (report->is_holder)
            throw tfsde::shape_error("predicted rate applies to convergence reports");
        *out = report->rate.predicted_rate;
    });
}

tfsde_status tfsde_report_gamma(const tfsde_report* report, double* gamma, int* warning) {
    if (need(report != nullptr, "null report")) return TFSDE_ERR_CONFIG;
    return guard([&] {
        if (report->is_holder) throw tfsde::shape_error("gamma applies to convergence reports");
        if (gamma) *gamma = report->rate.gamma;
        if (warning) *warning = report->rate.gamma_warning ? 1 : 0;
    });
}

tfsde_status tfsde_report_holder_estimate(const tfsde_report* report, double* estimate,
                                          double* target) {
    if (need(report != nullptr, "null report")) return TFSDE_ERR_CONFIG;
    return guard([&] {
        if (!report->is_holder)
            throw tfsde::shape_error("holder accessors apply to holder reports");
        if (estimate) *estimate = report->holder.estimate;
        if (target) *target = report->holder.target;
    });
}

tfsde_status tfsde_report_write_csv(const tfsde_report* report, const char* path) {
    if (need(report != nullptr && path != nullptr, "null pointer")) return TFSDE_ERR_CONFIG;
    return guard([&] {
        if (report->is_holder)
            tfsde::write_holder_csv(report->holder, path);
        else
            tfsde::write_rate_csv(report->rate, path);
    });
}

tfsde_status tfsde_report_write_json(const tfsde_report* report, const char* path) {
    if (need(report != nullptr && path != nullptr, "null pointer")) return TFSDE_ERR_CONFIG;
    return guard([&] {
        if (report->is_holder)
            tfsde::write_holder_json(report->holder, path);
        else
            tfsde::write_rate_json(report->rate, path);
    });
}

void tfsde_report_free(tfsde_report* report) { delete report; }

tfsde_status tfsde_mc_error(const tfsde_plan* plan, int64_t res_a, int64_t res_b, double* out) {
    if (need(plan != nullptr && out != nullptr, "null pointer")) return TFSDE_ERR_CONFIG;
    return guard([&] { *out = tfsde::mc_error(plan->impl, res_a, res_b); });
}

tfsde_status tfsde_convergence_rate(double e_prev, double e_next, double* out) {
    if (need(out != nullptr, "null output pointer")) return TFSDE_ERR_CONFIG;
    return guard([&] { *out = tfsde::convergence_rate(e_prev, e_next); });
}

} // extern "C"
