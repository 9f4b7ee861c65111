#include <tfsde.h>

#include <CLI11.hpp>

#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

namespace {

struct cli_error {
    int code;
};

void check(tfsde_status st, const std::string& stage) {
    if (st == TFSDE_OK) return;
    std::fprintf(stderr, "error (%s): %s\n", stage.c_str(), tfsde_last_error());
    throw cli_error{st == TFSDE_ERR_CONFIG ? 2 : 1};
}

struct table_deleter {
    void operator()(tfsde_table* t) const { tfsde_table_free(t); }
};
struct basis_deleter {
    void operator()(tfsde_basis* b) const { tfsde_basis_free(b); }
};
struct solution_deleter {
    void operator()(tfsde_solution* s) const { tfsde_solution_free(s); }
};
struct plan_deleter {
    void operator()(tfsde_plan* p) const { tfsde_plan_free(p); }
};
struct report_deleter {
    void operator()(tfsde_report* r) const { tfsde_report_free(r); }
};

using table_ptr = std::unique_ptr<tfsde_table, table_deleter>;
using basis_ptr = std::unique_ptr<tfsde_basis, basis_deleter>;
using solution_ptr = std::unique_ptr<tfsde_solution, solution_deleter>;
using plan_ptr = std::unique_ptr<tfsde_plan, plan_deleter>;
using report_ptr = std::unique_ptr<tfsde_report, report_deleter>;

std::string fmt_f64(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string join_i64(const std::vector<std::int64_t>& v) {
    std::string s;
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(v[i]);
    }
    return s;
}

std::string sidecar_path(const std::string& output) {
    const size_t slash = output.find_last_of('/');
    const size_t dot = output.find_last_of('.');
    std::string side;
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
        side = output + ".json";
    else
        side = output.substr(0, dot) + ".json";
    if (side == output) side = output + ".sidecar.json";
    return side;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        std::fprintf(stderr, "error (output): cannot open output file: %s\n", path.c_str());
        throw cli_error{1};
    }
    return out;
}

// ----- sample-tfbm -----

struct SampleArgs {
    double hurst = 0.8;
    double mu = 1.0;
    double horizon = 1.0;
    std::int64_t steps = 64;
    std::int64_t paths = 1;
    std::uint64_t seed = 1;
    bool binary = false;
    std::string output = "tfbm.csv";
};

int run_sample(const SampleArgs& a) {
    tfsde_table* raw = nullptr;
    check(tfsde_table_sample(a.hurst, a.mu, a.horizon, a.steps, a.paths, a.seed, &raw),
          "tfgn sampling");
    table_ptr table(raw);
    if (a.binary) {
        check(tfsde_table_dump(table.get(), a.output.c_str()), "table output");
        std::printf("wrote %s\n", a.output.c_str());
        return 0;
    }
    std::vector<std::vector<double>> rows((size_t)a.paths, std::vector<double>((size_t)a.steps));
    for (std::int64_t p = 0; p < a.paths; ++p)
        check(tfsde_table_row(table.get(), p, rows[(size_t)p].data()), "table access");
    std::ofstream out = open_out(a.output);
    out << "t";
    for (std::int64_t p = 0; p < a.paths; ++p) out << ",path_" << (p + 1);
    out << "\n";
    std::vector<double> level((size_t)a.paths, 0.0);
    const double dt = a.horizon / (double)a.steps;
    for (std::int64_t k = 0; k <= a.steps; ++k) {
        if (k > 0)
            for (std::int64_t p = 0; p < a.paths; ++p) level[(size_t)p] += rows[(size_t)p][(size_t)k - 1];
        out << fmt_f64((double)k * dt);
        for (std::int64_t p = 0; p < a.paths; ++p) out << "," << fmt_f64(level[(size_t)p]);
        out << "\n";
    }
    out.close();
    std::printf("wrote %s\n", a.output.c_str());
    return 0;
}

// ----- solve -----

struct SolveArgs {
    double alpha = 0.5;
    double hurst = 0.8;
    double mu = 1.0;
    double rho = 0.75;
    double horizon = 1.0;
    int dim = 2;
    int modes_per_dim = 8;
    std::int64_t steps = 64;
    std::uint64_t seed = 1;
    std::int64_t ratio = 1;
    std::string scheme = "transformed";
    bool zero_forcing = false;
    std::vector<std::int64_t> snapshots;
    bool binary = false;
    std::string output = "trajectory.csv";
};

int run_solve(const SolveArgs& a) {
    if (a.scheme != "transformed" && a.scheme != "naive") {
        std::fprintf(stderr, "error (configuration): scheme must be transformed or naive\n");
        return 2;
    }
    tfsde_basis* braw = nullptr;
    check(tfsde_basis_create(a.dim, a.modes_per_dim, &braw), "basis construction");
    basis_ptr basis(braw);
    std::int64_t n_modes = 0;
    check(tfsde_basis_size(basis.get(), &n_modes), "basis construction");
    tfsde_table* traw = nullptr;
    check(tfsde_table_sample(a.hurst, a.mu, a.horizon, a.steps * a.ratio, n_modes, a.seed, &traw),
          "tfgn sampling");
    table_ptr table(traw);
    tfsde_model model{};
    model.alpha = a.alpha;
    model.horizon = a.horizon;
    model.rho = a.rho;
    model.conv_substep_ratio = a.ratio;
    model.naive_scheme = a.scheme == "naive" ? 1 : 0;
    model.zero_forcing = a.zero_forcing ? 1 : 0;
    tfsde_solution* sraw = nullptr;
    check(tfsde_solve(&model, basis.get(), nullptr, table.get(),
                      a.snapshots.empty() ? nullptr : a.snapshots.data(),
                      (std::int64_t)a.snapshots.size(), &sraw),
          "solve");
    solution_ptr sol(sraw);
    if (a.binary)
        check(tfsde_solution_export_binary(sol.get(), a.output.c_str()), "trajectory output");
    else
        check(tfsde_solution_export_csv(sol.get(), basis.get(), a.output.c_str()),
              "trajectory output");
    std::printf("wrote %s\n", a.output.c_str());
    return 0;
}

// ----- shared plan options for table/holder -----

struct PlanArgs {
    std::string preset;
    std::string config;
    std::string mode;
    double alpha = 0, hurst = 0, mu = 0, rho = 0, horizon = 0;
    std::int64_t modes_per_dim = 0, steps = 0, trajectories = 0, ratio = 0;
    std::uint64_t seed = 0;
    std::vector<std::int64_t> ladder, lags;
    std::string output;
    int threads = 0;
    // CLI11 options, for count() checks
    CLI::Option *o_mode = nullptr, *o_alpha = nullptr, *o_hurst = nullptr, *o_mu = nullptr,
                *o_rho = nullptr, *o_horizon = nullptr, *o_modes = nullptr, *o_steps = nullptr,
                *o_k = nullptr, *o_ratio = nullptr, *o_seed = nullptr, *o_ladder = nullptr,
                *o_lags = nullptr, *o_output = nullptr, *o_threads = nullptr;
};

void add_plan_options(CLI::App* cmd, PlanArgs& a, bool holder) {
    auto* o_preset = cmd->add_option("--preset", a.preset, "named preset (table1..table5, holder)");
    cmd->add_option("--config", a.config, "flat key-value config file")->excludes(o_preset);
    if (!holder) a.o_mode = cmd->add_option("--mode", a.mode, "temporal or spatial");
    a.o_alpha = cmd->add_option("--alpha", a.alpha, "fractional exponent in (0,1)");
    a.o_hurst = cmd->add_option("--hurst", a.hurst, "Hurst parameter H > 0, H != 1/2");
    a.o_mu = cmd->add_option("--mu", a.mu, "tempering rate mu > 0");
    a.o_rho = cmd->add_option("--rho", a.rho, "noise decay exponent");
    a.o_horizon = cmd->add_option("--horizon", a.horizon, "terminal time T");
    a.o_modes = cmd->add_option("--modes-per-dim", a.modes_per_dim, "modes per dimension N");
    a.o_steps = cmd->add_option("--steps", a.steps, "time steps M");
    a.o_k = cmd->add_option("--k", a.trajectories, "Monte Carlo trajectories");
    a.o_ratio = cmd->add_option("--ratio", a.ratio, "convolution substeps per solver step");
    a.o_seed = cmd->add_option("--seed", a.seed, "master seed");
    if (!holder)
        a.o_ladder =
            cmd->add_option("--ladder", a.ladder, "resolution ladder, ratio 3/2")->delimiter(',');
    else
        a.o_lags = cmd->add_option("--lags", a.lags, "regression lags in fine steps")->delimiter(',');
    a.o_output = cmd->add_option("--output", a.output, "CSV output path");
    a.o_threads = cmd->add_option("--threads", a.threads, "worker threads");
}

plan_ptr build_plan(const PlanArgs& a, const char* fallback_preset) {
    tfsde_plan* praw = nullptr;
    if (!a.config.empty())
        check(tfsde_plan_load(a.config.c_str(), &praw), "configuration");
    else if (!a.preset.empty())
        check(tfsde_plan_preset(a.preset.c_str(), &praw), "configuration");
    else if (fallback_preset)
        check(tfsde_plan_preset(fallback_preset, &praw), "configuration");
    else
        check(tfsde_plan_default(&praw), "configuration");
    plan_ptr plan(praw);
    auto set = [&](const char* key, const std::string& value) {
        check(tfsde_plan_set(plan.get(), key, value.c_str()), "configuration");
    };
    if (a.o_mode && a.o_mode->count()) set("mode", a.mode);
    if (a.o_alpha->count()) set("alpha", fmt_f64(a.alpha));
    if (a.o_hurst->count()) set("hurst", fmt_f64(a.hurst));
    if (a.o_mu->count()) set("mu", fmt_f64(a.mu));
    if (a.o_rho->count()) set("rho", fmt_f64(a.rho));
    if (a.o_horizon->count()) set("horizon", fmt_f64(a.horizon));
    if (a.o_modes->count()) set("modes_per_dim", std::to_string(a.modes_per_dim));
    if (a.o_steps->count()) set("steps", std::to_string(a.steps));
    if (a.o_k->count()) set("trajectories", std::to_string(a.trajectories));
    if (a.o_ratio->count()) set("conv_substep_ratio", std::to_string(a.ratio));
    if (a.o_seed->count()) set("seed", std::to_string(a.seed));
    if (a.o_ladder && a.o_ladder->count()) set("ladder", join_i64(a.ladder));
    if (a.o_lags && a.o_lags->count()) set("lags", join_i64(a.lags));
    if (a.o_output->count()) set("output", a.output);
    if (a.o_threads->count()) {
        if (a.threads < 1) {
            std::fprintf(stderr, "error (configuration): --threads must be >= 1\n");
            throw cli_error{2};
        }
        setenv("TFSDE_THREADS", std::to_string(a.threads).c_str(), 1);
    }
    return plan;
}

std::string plan_value(const tfsde_plan* plan, const char* key) {
    char buf[512];
    check(tfsde_plan_get(plan, key, buf, sizeof(buf)), "configuration");
    return buf;
}

int run_table(const PlanArgs& a) {
    plan_ptr plan = build_plan(a, nullptr);
    const std::string output = plan_value(plan.get(), "output");
    if (output.empty()) {
        std::fprintf(stderr, "error (configuration): no output path configured\n");
        return 2;
    }
    tfsde_report* rraw = nullptr;
    check(tfsde_run_table(plan.get(), &rraw), "table run");
    report_ptr report(rraw);
    double gamma = 0;
    int warn = 0;
    check(tfsde_report_gamma(report.get(), &gamma, &warn), "table run");
    if (warn)
        std::fprintf(stderr,
                     "warning: gamma = %.6f <= 0; outside the convergence theory's standing "
                     "condition (rho > 1/2 - alpha*min{H,1})\n",
                     gamma);
    double predicted = 0;
    check(tfsde_report_predicted_rate(report.get(), &predicted), "table run");
    std::int64_t rungs = 0;
    check(tfsde_report_rung_count(report.get(), &rungs), "table run");
    const std::string res_label = plan_value(plan.get(), "mode") == "spatial" ? "N" : "M";
    for (std::int64_t i = 0; i < rungs; ++i) {
        std::int64_t res = 0;
        double err = 0, rate = 0, se = 0;
        check(tfsde_report_rung(report.get(), i, &res, &err, &rate, &se), "table run");
        if (i == 0)
            std::printf("%s=%-6" PRId64 " error=%.5e (se %.1e)\n", res_label.c_str(), res, err, se);
        else
            std::printf("%s=%-6" PRId64 " error=%.5e (se %.1e) rate=%.3f\n", res_label.c_str(),
                        res, err, se, rate);
    }
    std::printf("predicted rate %.3f\n", predicted);
    check(tfsde_report_write_csv(report.get(), output.c_str()), "report output");
    const std::string side = sidecar_path(output);
    check(tfsde_report_write_json(report.get(), side.c_str()), "report output");
    std::printf("wrote %s and %s\n", output.c_str(), side.c_str());
    return 0;
}

int run_holder(const PlanArgs& a) {
    plan_ptr plan = build_plan(a, "holder");
    const std::string output = plan_value(plan.get(), "output");
    if (output.empty()) {
        std::fprintf(stderr, "error (configuration): no output path configured\n");
        return 2;
    }
    tfsde_report* rraw = nullptr;
    check(tfsde_run_holder(plan.get(), &rraw), "holder run");
    report_ptr report(rraw);
    double estimate = 0, target = 0;
    check(tfsde_report_holder_estimate(report.get(), &estimate, &target), "holder run");
    std::printf("holder exponent estimate %.4f (target min{H,1} = %.4f)\n", estimate, target);
    check(tfsde_report_write_csv(report.get(), output.c_str()), "report output");
    const std::string side = sidecar_path(output);
    check(tfsde_report_write_json(report.get(), side.c_str()), "report output");
    std::printf("wrote %s and %s\n", output.c_str(), side.c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"tempered-fractional SPDE toolkit"};
    app.require_subcommand(1);

    SampleArgs sample;
    auto* cmd_sample =
        app.add_subcommand("sample-tfbm", "sample tempered fractional Brownian motion paths");
    cmd_sample->add_option("--hurst", sample.hurst, "Hurst parameter H > 0, H != 1/2");
    cmd_sample->add_option("--mu", sample.mu, "tempering rate mu > 0");
    cmd_sample->add_option("--horizon", sample.horizon, "path length T");
    cmd_sample->add_option("--steps", sample.steps, "grid increments");
    cmd_sample->add_option("--paths", sample.paths, "independent paths");
    cmd_sample->add_option("--seed", sample.seed, "seed");
    cmd_sample->add_flag("--binary", sample.binary, "write the raw increment table");
    cmd_sample->add_option("--output", sample.output, "output path");

    SolveArgs solve;
    auto* cmd_solve = app.add_subcommand("solve", "integrate one trajectory of the field");
    cmd_solve->add_option("--alpha", solve.alpha, "fractional exponent in (0,1)");
    cmd_solve->add_option("--hurst", solve.hurst, "Hurst parameter H > 0, H != 1/2");
    cmd_solve->add_option("--mu", solve.mu, "tempering rate mu > 0");
    cmd_solve->add_option("--rho", solve.rho, "noise decay exponent");
    cmd_solve->add_option("--horizon", solve.horizon, "terminal time T");
    cmd_solve->add_option("--dim", solve.dim, "spatial dimension (1-3)");
    cmd_solve->add_option("--modes-per-dim", solve.modes_per_dim, "modes per dimension N");
    cmd_solve->add_option("--steps", solve.steps, "solver steps M");
    cmd_solve->add_option("--seed", solve.seed, "noise seed");
    cmd_solve->add_option("--ratio", solve.ratio, "convolution substeps per solver step");
    cmd_solve->add_option("--scheme", solve.scheme, "transformed (default) or naive");
    cmd_solve->add_flag("--zero-forcing", solve.zero_forcing, "drop the f(u) = u forcing");
    cmd_solve->add_option("--snapshots", solve.snapshots, "recorded step indices")->delimiter(',');
    cmd_solve->add_flag("--binary", solve.binary, "write the compact binary trajectory");
    cmd_solve->add_option("--output", solve.output, "output path");

    PlanArgs table_args;
    auto* cmd_table = app.add_subcommand("table", "Monte Carlo convergence table");
    add_plan_options(cmd_table, table_args, false);

    PlanArgs holder_args;
    auto* cmd_holder = app.add_subcommand("holder", "Holder-exponent regression");
    add_plan_options(cmd_holder, holder_args, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        std::fprintf(stderr, "error (usage): %s\n", e.what());
        return 2;
    }

    try {
        if (cmd_sample->parsed()) return run_sample(sample);
        if (cmd_solve->parsed()) return run_solve(solve);
        if (cmd_table->parsed()) return run_table(table_args);
        if (cmd_holder->parsed()) return run_holder(holder_args);
    } catch (const cli_error& e) {
        return e.code;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error (runtime): %s\n", e.what());
        return 1;
    }
    return 2;
}
