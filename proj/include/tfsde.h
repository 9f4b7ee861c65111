#ifndef TFSDE_H
#define TFSDE_H

/* C interface to the tempered-fractional SPDE toolkit: tempered fractional
 * Gaussian increment tables, the spectral Galerkin basis, the transformed
 * semi-implicit solver, and the Monte Carlo convergence harness. All entry
 * points return a status code; on failure tfsde_last_error() describes the
 * problem for the calling thread. */

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum tfsde_status {
    TFSDE_OK = 0,
    TFSDE_ERR_RUNTIME = 1,
    TFSDE_ERR_CONFIG = 2,
    TFSDE_ERR_SHAPE = 3,
    TFSDE_ERR_ACCURACY = 4,
    TFSDE_ERR_FACTORIZATION = 5,
    TFSDE_ERR_PROTOCOL = 6,
    TFSDE_ERR_DEGENERATE = 7
} tfsde_status;

/* message for the most recent failure on this thread; never NULL */
const char* tfsde_last_error(void);

/* ---- special functions and the tfGn kernel ---- */

tfsde_status tfsde_ln_gamma(double x, double* out);
/* modified Bessel function of the second kind K_order(y), absolute tolerance */
tfsde_status tfsde_bessel_k(double order, double y, double abs_tol, double* out);
/* variance prefactor: Var[beta(t)] = C_t^2 * t^{2H} */
tfsde_status tfsde_c_t_squared(double hurst, double mu, double t, double* out);
/* E[beta(t) beta(s)] */
tfsde_status tfsde_covariance(double hurst, double mu, double t, double s, double* out);

/* ---- tempered fractional Gaussian increment tables ---- */

typedef struct tfsde_table tfsde_table;

/* sample `modes` independent increment rows on a uniform grid of `steps`
 * increments over [0, horizon] */
tfsde_status tfsde_table_sample(double hurst, double mu, double horizon, int64_t steps,
                                int64_t modes, uint64_t seed, tfsde_table** out);
/* block-sum onto a grid with steps/ratio increments */
tfsde_status tfsde_table_coarsen(const tfsde_table* table, int64_t ratio, tfsde_table** out);
tfsde_status tfsde_table_dump(const tfsde_table* table, const char* path);
tfsde_status tfsde_table_load(const char* path, tfsde_table** out);
tfsde_status tfsde_table_info(const tfsde_table* table, double* hurst, double* mu, double* horizon,
                              int64_t* steps, int64_t* modes, uint64_t* seed);
/* copy one mode's increments; `out` must hold `steps` doubles */
tfsde_status tfsde_table_row(const tfsde_table* table, int64_t mode, double* out);
void tfsde_table_free(tfsde_table* table);

/* ---- spectral basis on the unit cube ---- */

typedef struct tfsde_basis tfsde_basis;

tfsde_status tfsde_basis_create(int dim, int modes_per_dim, tfsde_basis** out);
tfsde_status tfsde_basis_size(const tfsde_basis* basis, int64_t* out);
tfsde_status tfsde_basis_eigenvalue(const tfsde_basis* basis, int64_t index, double* out);
tfsde_status tfsde_basis_mode(const tfsde_basis* basis, int64_t index, int* i1, int* i2, int* i3);
/* L2 coefficients of f by tensor Gauss-Legendre quadrature; `coeffs` must
 * hold basis size doubles; quad_points_per_dim = 0 picks the default rule */
tfsde_status tfsde_basis_project(const tfsde_basis* basis,
                                 double (*f)(const double* point, void* ctx), void* ctx,
                                 int quad_points_per_dim, double* coeffs);
/* min over sorted eigenvalues of lambda_(i) divided by its lower bound */
tfsde_status tfsde_basis_min_bound_ratio(const tfsde_basis* basis, double* out);
void tfsde_basis_free(tfsde_basis* basis);

/* ---- transformed semi-implicit solver ---- */

typedef struct tfsde_model {
    double alpha;               /* fractional exponent, in (0, 1) */
    double horizon;             /* terminal time T */
    double rho;                 /* sigma_m = lambda_m^{-rho} unless overridden */
    int64_t conv_substep_ratio; /* convolution grid refinement, >= 1 */
    int naive_scheme;           /* nonzero = diagnostic untransformed scheme */
    int zero_forcing;           /* nonzero = f = 0 (default f(u) = u) */
    const double* sigma;        /* optional per-mode amplitudes, basis order */
    int64_t sigma_len;          /* length of sigma when non-NULL */
} tfsde_model;

typedef struct tfsde_solution tfsde_solution;

/* march the scheme; the table must carry steps = M * conv_substep_ratio
 * increments and at least basis-size mode rows. u0 = NULL selects the
 * built-in initial surface x1^2 x2^2 (2-d bases only). snapshots = NULL
 * records every step; otherwise pass sorted step indices in [0, M]. */
tfsde_status tfsde_solve(const tfsde_model* model, const tfsde_basis* basis, const double* u0,
                         const tfsde_table* increments, const int64_t* snapshots,
                         int64_t n_snapshots, tfsde_solution** out);
tfsde_status tfsde_solution_count(const tfsde_solution* sol, int64_t* out);
tfsde_status tfsde_solution_index(const tfsde_solution* sol, int64_t snapshot,
                                  int64_t* time_index);
/* copy modal vectors at a snapshot; z, conv, u each may be NULL */
tfsde_status tfsde_solution_values(const tfsde_solution* sol, int64_t snapshot, double* z,
                                   double* conv, double* u);
tfsde_status tfsde_solution_export_csv(const tfsde_solution* sol, const tfsde_basis* basis,
                                       const char* path);
tfsde_status tfsde_solution_export_binary(const tfsde_solution* sol, const char* path);
void tfsde_solution_free(tfsde_solution* sol);

/* ---- experiment plans, tables, and reports ---- */

typedef struct tfsde_plan tfsde_plan;

tfsde_status tfsde_plan_default(tfsde_plan** out);
/* table1..table5, holder */
tfsde_status tfsde_plan_preset(const char* name, tfsde_plan** out);
/* flat key-value file; a preset key is applied before the other keys */
tfsde_status tfsde_plan_load(const char* path, tfsde_plan** out);
/* keys: mode, alpha, hurst, mu, rho, horizon, modes_per_dim, steps,
 * trajectories, seed, conv_substep_ratio, ladder, lags, output, preset
 * (setting preset replaces the whole plan) */
tfsde_status tfsde_plan_set(tfsde_plan* plan, const char* key, const char* value);
tfsde_status tfsde_plan_get(const tfsde_plan* plan, const char* key, char* buf, size_t buf_len);
void tfsde_plan_free(tfsde_plan* plan);

typedef struct tfsde_report tfsde_report;

/* temporal or spatial convergence table, per the plan's mode */
tfsde_status tfsde_run_table(const tfsde_plan* plan, tfsde_report** out);
/* Holder-exponent regression; the plan's mode must be holder */
tfsde_status tfsde_run_holder(const tfsde_plan* plan, tfsde_report** out);
/* ladder rungs of a convergence report; rate is NaN on the first rung */
tfsde_status tfsde_report_rung_count(const tfsde_report* report, int64_t* out);
tfsde_status tfsde_report_rung(const tfsde_report* report, int64_t index, int64_t* resolution,
                               double* error, double* rate, double* se);
tfsde_status tfsde_report_predicted_rate(const tfsde_report* report, double* out);
tfsde_status tfsde_report_gamma(const tfsde_report* report, double* gamma, int* warning);
/* holder reports only */
tfsde_status tfsde_report_holder_estimate(const tfsde_report* report, double* estimate,
                                          double* target);
tfsde_status tfsde_report_write_csv(const tfsde_report* report, const char* path);
tfsde_status tfsde_report_write_json(const tfsde_report* report, const char* path);
void tfsde_report_free(tfsde_report* report);

/* ---- estimator utilities ---- */

/* coupled-noise root-mean-square terminal difference between two
 * resolutions under the plan (temporal or spatial mode) */
tfsde_status tfsde_mc_error(const tfsde_plan* plan, int64_t res_a, int64_t res_b, double* out);
/* ln(e_prev/e_next)/ln(3/2); requires both errors positive */
tfsde_status tfsde_convergence_rate(double e_prev, double e_next, double* out);

#ifdef __cplusplus
}
#endif

#endif /* TFSDE_H */
