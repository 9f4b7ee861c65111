#include "harness.hpp"
#include "errors.hpp"
#include "rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

namespace tfsde {

namespace {

using json = nlohmann::json;

constexpr int harness_dim = 2;

std::uint64_t mode_key(const std::array<int, 3>& m) {
    return (static_cast<std::uint64_t>(m[0]) << 42) | (static_cast<std::uint64_t>(m[1]) << 21) |
           static_cast<std::uint64_t>(m[2]);
}

std::vector<std::uint64_t> basis_mode_keys(const SpectralBasis& basis) {
    std::vector<std::uint64_t> keys(basis.modes.size());
    for (size_t m = 0; m < basis.modes.size(); ++m) keys[m] = mode_key(basis.modes[m]);
    return keys;
}

ModelConfig plan_model(const ExperimentPlan& plan, std::int64_t n_modes) {
    ModelConfig model;
    model.alpha = plan.alpha;
    model.horizon = plan.horizon;
    model.forcing.kind = plan.zero_forcing ? ForcingKind::zero : ForcingKind::linear_identity;
    model.noise.rho = plan.rho;
    if (plan.zero_noise) model.noise.sigma_override = Eigen::VectorXd::Zero(n_modes);
    model.conv_substep_ratio = plan.conv_substep_ratio;
    return model;
}

void run_parallel(std::int64_t n, const std::function<void(std::int64_t)>& body) {
    int workers = worker_count();
    if (workers > n) workers = (int)n;
    if (workers <= 1) {
        for (std::int64_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::int64_t> next{0};
    std::atomic<bool> bail{false};
    std::mutex gate;
    std::exception_ptr first;
    auto drain = [&] {
        for (;;) {
            if (bail.load(std::memory_order_relaxed)) return;
            std::int64_t i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= n) return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lk(gate);
                if (!first) first = std::current_exception();
                bail.store(true, std::memory_order_relaxed);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve((size_t)workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(drain);
    for (auto& t : pool) t.join();
    if (first) std::rethrow_exception(first);
}

struct MeanStat {
    double mean;
    double se;
};

MeanStat mean_and_se(const std::vector<double>& v) {
    const std::int64_t n = (std::int64_t)v.size();
    double mean = pairwise_sum(v.data(), n) / (double)n;
    if (n < 2) return {mean, 0.0};
    std::vector<double> centered(v.size());
    for (size_t i = 0; i < v.size(); ++i) {
        double d = v[i] - mean;
        centered[i] = d * d;
    }
    double var = pairwise_sum(centered.data(), n) / (double)(n - 1);
    return {mean, std::sqrt(var / (double)n)};
}

struct PairErrors {
    std::vector<double> error; // rmse per pair
    std::vector<double> se;    // delta-method standard error of the rmse
};

PairErrors reduce_pairs(const std::vector<std::vector<double>>& ssq) {
    PairErrors out;
    out.error.resize(ssq.size());
    out.se.resize(ssq.size());
    for (size_t p = 0; p < ssq.size(); ++p) {
        MeanStat s = mean_and_se(ssq[p]);
        double e = std::sqrt(std::max(s.mean, 0.0));
        out.error[p] = e;
        out.se[p] = e > 0.0 ? s.se / (2.0 * e) : 0.0;
    }
    return out;
}

size_t index_of(const std::vector<std::int64_t>& set, std::int64_t value) {
    auto it = std::find(set.begin(), set.end(), value);
    if (it == set.end()) throw shape_error("resolution missing from the solve set");
    return (size_t)(it - set.begin());
}

// recompute the block sums of `fine` with compensated accumulation and
// compare against the stored coarse table
void check_block_sums(const IncrementTable& fine, const IncrementTable& coarse) {
    if (fine.grid.steps % coarse.grid.steps != 0)
        throw protocol_error("rung tables are not nested refinements of one grid");
    const std::int64_t ratio = fine.grid.steps / coarse.grid.steps;
    for (std::int64_t m = 0; m < coarse.data.rows(); ++m) {
        for (std::int64_t c = 0; c < coarse.grid.steps; ++c) {
            long double s = 0.0L;
            for (std::int64_t f = 0; f < ratio; ++f) s += (long double)fine.data(m, c * ratio + f);
            double ref = (double)s;
            double tol = 1e-12 * (1.0 + std::fabs(ref));
            if (std::fabs(ref - coarse.data(m, c)) > tol)
                throw protocol_error("coarse increments are not block sums of the fine path");
        }
    }
}

PairErrors temporal_engine(const ExperimentPlan& plan, const std::vector<std::int64_t>& solve_set,
                           const std::vector<std::pair<std::int64_t, std::int64_t>>& pairs) {
    TemperingParams tp = plan.tempering();
    tp.validate();
    if (plan.trajectories < 1) throw config_error("trajectories must be >= 1");
    const std::int64_t ratio = plan.conv_substep_ratio;
    std::int64_t fine_m = 1;
    for (std::int64_t m : solve_set) {
        if (m < 1) throw config_error("resolutions must be >= 1");
        fine_m = std::lcm(fine_m, m);
    }
    const TimeGrid fine_grid{plan.horizon, fine_m * ratio};
    const SpectralBasis basis = build_basis(harness_dim, (int)plan.modes_per_dim);
    const Eigen::VectorXd u0 = default_initial_coeffs(basis);
    const std::vector<std::uint64_t> keys = basis_mode_keys(basis);
    const CholeskyFactor factor = cholesky(increment_covariance(tp, fine_grid));
    const ModelConfig model = plan_model(plan, basis.size());
    model.validate();

    const std::int64_t K = plan.trajectories;
    std::vector<std::vector<double>> ssq(pairs.size(), std::vector<double>((size_t)K));
    run_parallel(K, [&](std::int64_t k) {
        IncrementTable fine =
            sample_increments(factor, basis.size(), mix_key(plan.master_seed, (std::uint64_t)k), keys);
        std::vector<IncrementTable> tables(solve_set.size());
        std::vector<Eigen::VectorXd> terminal(solve_set.size());
        for (size_t r = 0; r < solve_set.size(); ++r) {
            tables[r] = coarsen(fine, fine_m / solve_set[r]);
            SolveOptions opt;
            opt.snapshots = {solve_set[r]};
            terminal[r] = solve_path(model, basis, u0, tables[r], opt).terminal().u;
        }
        if (k == 0) {
            for (size_t r = 0; r < solve_set.size(); ++r) check_block_sums(fine, tables[r]);
        }
        for (size_t p = 0; p < pairs.size(); ++p) {
            size_t ia = index_of(solve_set, pairs[p].first);
            size_t ib = index_of(solve_set, pairs[p].second);
            ssq[p][(size_t)k] = (terminal[ib] - terminal[ia]).squaredNorm();
        }
    });
    return reduce_pairs(ssq);
}

PairErrors spatial_engine(const ExperimentPlan& plan, const std::vector<std::int64_t>& n_set,
                          const std::vector<std::pair<std::int64_t, std::int64_t>>& pairs) {
    TemperingParams tp = plan.tempering();
    tp.validate();
    if (plan.trajectories < 1) throw config_error("trajectories must be >= 1");
    if (plan.steps < 1) throw config_error("steps must be >= 1");
    for (std::int64_t n : n_set)
        if (n < 1) throw config_error("resolutions must be >= 1");
    const std::int64_t n_max = *std::max_element(n_set.begin(), n_set.end());
    const TimeGrid grid{plan.horizon, plan.steps * plan.conv_substep_ratio};
    const CholeskyFactor factor = cholesky(increment_covariance(tp, grid));

    std::vector<SpectralBasis> bases;
    std::vector<Eigen::VectorXd> u0s;
    std::vector<ModelConfig> models;
    std::vector<std::vector<std::int64_t>> row_in_max(n_set.size());
    for (size_t r = 0; r < n_set.size(); ++r) {
        bases.push_back(build_basis(harness_dim, (int)n_set[r]));
        u0s.push_back(default_initial_coeffs(bases[r]));
        models.push_back(plan_model(plan, bases[r].size()));
        models[r].validate();
        row_in_max[r].resize((size_t)bases[r].size());
        for (std::int64_t m = 0; m < bases[r].size(); ++m) {
            const auto& idx = bases[r].modes[(size_t)m];
            row_in_max[r][(size_t)m] = (std::int64_t)(idx[0] - 1) * n_max + (idx[1] - 1);
        }
    }
    const size_t r_max = index_of(n_set, n_max);
    const std::vector<std::uint64_t> keys_max = basis_mode_keys(bases[r_max]);

    // per-pair embedding: position of each larger-basis mode inside the
    // smaller basis, -1 when outside
    std::vector<std::vector<std::int64_t>> embed(pairs.size());
    for (size_t p = 0; p < pairs.size(); ++p) {
        const std::int64_t na = std::min(pairs[p].first, pairs[p].second);
        const std::int64_t nb = std::max(pairs[p].first, pairs[p].second);
        const SpectralBasis& bb = bases[index_of(n_set, nb)];
        embed[p].resize((size_t)bb.size());
        for (std::int64_t m = 0; m < bb.size(); ++m) {
            const auto& idx = bb.modes[(size_t)m];
            embed[p][(size_t)m] =
                (idx[0] <= na && idx[1] <= na) ? (std::int64_t)(idx[0] - 1) * na + (idx[1] - 1) : -1;
        }
    }

    const std::int64_t K = plan.trajectories;
    std::vector<std::vector<double>> ssq(pairs.size(), std::vector<double>((size_t)K));
    run_parallel(K, [&](std::int64_t k) {
        const std::uint64_t seed = mix_key(plan.master_seed, (std::uint64_t)k);
        IncrementTable uni = sample_increments(factor, (std::int64_t)n_max * n_max, seed, keys_max);
        std::vector<Eigen::VectorXd> terminal(n_set.size());
        for (size_t r = 0; r < n_set.size(); ++r) {
            SolveOptions opt;
            opt.snapshots = {plan.steps};
            if (n_set[r] == n_max) {
                terminal[r] = solve_path(models[r], bases[r], u0s[r], uni, opt).terminal().u;
                continue;
            }
            IncrementTable sub;
            sub.grid = grid;
            sub.params = tp;
            sub.modes = bases[r].size();
            sub.seed = seed;
            sub.data.resize(bases[r].size(), grid.steps);
            for (std::int64_t m = 0; m < bases[r].size(); ++m)
                sub.data.row(m) = uni.data.row(row_in_max[r][(size_t)m]);
            if (k == 0) {
                // nesting check by recomputation: the gathered rows must equal
                // a fresh draw keyed by the small basis's index tuples
                IncrementTable redo =
                    sample_increments(factor, bases[r].size(), seed, basis_mode_keys(bases[r]));
                if (redo.data != sub.data)
                    throw protocol_error("nested bases disagree on shared noise rows");
            }
            terminal[r] = solve_path(models[r], bases[r], u0s[r], sub, opt).terminal().u;
        }
        for (size_t p = 0; p < pairs.size(); ++p) {
            const std::int64_t na = std::min(pairs[p].first, pairs[p].second);
            const std::int64_t nb = std::max(pairs[p].first, pairs[p].second);
            const Eigen::VectorXd& ca = terminal[index_of(n_set, na)];
            const Eigen::VectorXd& cb = terminal[index_of(n_set, nb)];
            double s = 0.0;
            for (std::int64_t m = 0; m < cb.size(); ++m) {
                const std::int64_t e = embed[p][(size_t)m];
                const double d = e >= 0 ? cb[m] - ca[e] : cb[m];
                s += d * d;
            }
            ssq[p][(size_t)k] = s;
        }
    });
    return reduce_pairs(ssq);
}

std::vector<std::pair<std::int64_t, std::int64_t>> ladder_pairs(
    const std::vector<std::int64_t>& ladder, std::vector<std::int64_t>& solve_set) {
    solve_set = ladder;
    solve_set.push_back(3 * ladder.back() / 2);
    std::vector<std::pair<std::int64_t, std::int64_t>> pairs;
    for (size_t j = 0; j < ladder.size(); ++j) pairs.emplace_back(solve_set[j], solve_set[j + 1]);
    return pairs;
}

std::vector<RungStat> assemble_rungs(const std::vector<std::int64_t>& ladder,
                                     const PairErrors& pe) {
    std::vector<RungStat> rungs(ladder.size());
    for (size_t j = 0; j < ladder.size(); ++j) {
        rungs[j].resolution = ladder[j];
        rungs[j].error = pe.error[j];
        rungs[j].se = pe.se[j];
        rungs[j].rate = j == 0 ? std::numeric_limits<double>::quiet_NaN()
                               : convergence_rate(pe.error[j - 1], pe.error[j]);
    }
    return rungs;
}

double elapsed_seconds(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string trimmed(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

double parse_f64(const std::string& key, const std::string& value) {
    char* end = nullptr;
    double v = std::strtod(value.c_str(), &end);
    if (end == value.c_str() || *end != '\0' || !std::isfinite(v))
        throw config_error("invalid value for " + key + ": " + value);
    return v;
}

std::int64_t parse_i64(const std::string& key, const std::string& value) {
    char* end = nullptr;
    long long v = std::strtoll(value.c_str(), &end, 10);
    if (end == value.c_str() || *end != '\0')
        throw config_error("invalid value for " + key + ": " + value);
    return (std::int64_t)v;
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    char* end = nullptr;
    unsigned long long v = std::strtoull(value.c_str(), &end, 10);
    if (end == value.c_str() || *end != '\0')
        throw config_error("invalid value for " + key + ": " + value);
    return (std::uint64_t)v;
}

std::vector<std::int64_t> parse_i64_list(const std::string& key, const std::string& value) {
    std::string s = value;
    std::replace(s.begin(), s.end(), ',', ' ');
    std::istringstream in(s);
    std::vector<std::int64_t> out;
    std::string tok;
    while (in >> tok) out.push_back(parse_i64(key, tok));
    if (out.empty()) throw config_error("invalid value for " + key + ": " + value);
    return out;
}

std::string join_i64(const std::vector<std::int64_t>& v) {
    std::string s;
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(v[i]);
    }
    return s;
}

std::string fmt_f64(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string mode_name(PlanMode mode) {
    switch (mode) {
        case PlanMode::temporal: return "temporal";
        case PlanMode::spatial: return "spatial";
        default: return "holder";
    }
}

json plan_to_json(const ExperimentPlan& p) {
    json j;
    j["mode"] = mode_name(p.mode);
    j["preset"] = p.preset_name.empty() ? json(nullptr) : json(p.preset_name);
    j["alpha"] = p.alpha;
    j["hurst"] = p.hurst;
    j["mu"] = p.mu;
    j["rho"] = p.rho;
    j["horizon"] = p.horizon;
    j["modes_per_dim"] = p.modes_per_dim;
    j["steps"] = p.steps;
    j["trajectories"] = p.trajectories;
    j["seed"] = p.master_seed;
    j["conv_substep_ratio"] = p.conv_substep_ratio;
    j["ladder"] = p.ladder;
    j["lags"] = p.holder_lags;
    j["zero_noise"] = p.zero_noise;
    j["zero_forcing"] = p.zero_forcing;
    j["output"] = p.output;
    return j;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw config_error("cannot open output file: " + path);
    return out;
}

} // namespace

Eigen::VectorXd default_initial_coeffs(const SpectralBasis& basis) {
    return project([](const double* x) { return x[0] * x[0] * x[1] * x[1]; }, basis,
                   default_quad_points(basis.modes_per_dim));
}

double convergence_rate(double e_prev, double e_next) {
    if (!(e_prev > 0.0) || !(e_next > 0.0))
        throw degenerate_error("convergence rate needs positive errors");
    return std::log(e_prev / e_next) / std::log(1.5);
}

void ExperimentPlan::validate() const {
    tempering().validate();
    if (!(alpha > 0.0 && alpha < 1.0)) throw config_error("alpha must lie in (0, 1)");
    if (!(horizon > 0.0)) throw config_error("horizon must be positive");
    if (rho < 0.0) throw config_error("rho must be nonnegative");
    if (trajectories < 1) throw config_error("trajectories must be >= 1");
    if (conv_substep_ratio < 1) throw config_error("conv_substep_ratio must be >= 1");
    if (modes_per_dim < 1) throw config_error("modes_per_dim must be >= 1");
    if (steps < 1) throw config_error("steps must be >= 1");
    if (mode == PlanMode::holder) {
        std::vector<std::int64_t> lags = holder_lags;
        std::sort(lags.begin(), lags.end());
        lags.erase(std::unique(lags.begin(), lags.end()), lags.end());
        if (lags.size() < 3) throw config_error("holder regression needs at least 3 distinct lags");
        if (lags.front() < 1 || lags.back() > steps - 1)
            throw config_error("lags must lie in [1, steps-1]");
        return;
    }
    if (ladder.size() < 3) throw config_error("ladder needs at least 3 entries");
    if (ladder.front() < 2) throw config_error("ladder entries must be >= 2");
    for (size_t i = 0; i + 1 < ladder.size(); ++i)
        if (2 * ladder[i + 1] != 3 * ladder[i])
            throw config_error("ladder entries must increase by the exact ratio 3/2");
    if (ladder.back() % 2 != 0)
        throw config_error("the last ladder entry must be even (its 3/2 partner must be integral)");
}

double mc_error(const ExperimentPlan& plan, std::int64_t res_a, std::int64_t res_b) {
    if (res_a < 1 || res_b < 1) throw config_error("resolutions must be >= 1");
    std::vector<std::int64_t> solve_set{res_a};
    if (res_b != res_a) solve_set.push_back(res_b);
    std::vector<std::pair<std::int64_t, std::int64_t>> pairs{{res_a, res_b}};
    switch (plan.mode) {
        case PlanMode::temporal: return temporal_engine(plan, solve_set, pairs).error[0];
        case PlanMode::spatial: return spatial_engine(plan, solve_set, pairs).error[0];
        default: throw config_error("mc_error requires a temporal or spatial plan");
    }
}

double coupled_pair_sq_error(const ExperimentPlan& plan, std::int64_t m_a,
                             const IncrementTable& table_a, std::int64_t m_b,
                             const IncrementTable& table_b) {
    TemperingParams tp = plan.tempering();
    tp.validate();
    if (table_a.seed != table_b.seed)
        throw protocol_error("rung tables were drawn from different seeds");
    const std::int64_t ratio = plan.conv_substep_ratio;
    if (table_a.grid.steps != m_a * ratio || table_b.grid.steps != m_b * ratio)
        throw shape_error("table steps do not match resolution x conv_substep_ratio");
    if (std::fabs(table_a.grid.horizon - table_b.grid.horizon) >
        1e-9 * std::max(1.0, std::fabs(table_a.grid.horizon)))
        throw protocol_error("rung tables cover different horizons");
    const IncrementTable& finer = table_a.grid.steps >= table_b.grid.steps ? table_a : table_b;
    const IncrementTable& coarser = table_a.grid.steps >= table_b.grid.steps ? table_b : table_a;
    if (finer.grid.steps == coarser.grid.steps) {
        if (finer.data != coarser.data)
            throw protocol_error("equal-resolution tables carry different increments");
    } else {
        check_block_sums(finer, coarser);
    }
    const SpectralBasis basis = build_basis(harness_dim, (int)plan.modes_per_dim);
    if (table_a.modes < basis.size() || table_b.modes < basis.size())
        throw shape_error("tables carry fewer mode rows than the basis");
    const Eigen::VectorXd u0 = default_initial_coeffs(basis);
    const ModelConfig model = plan_model(plan, basis.size());
    SolveOptions opt_a, opt_b;
    opt_a.snapshots = {m_a};
    opt_b.snapshots = {m_b};
    const Eigen::VectorXd ua = solve_path(model, basis, u0, table_a, opt_a).terminal().u;
    const Eigen::VectorXd ub = solve_path(model, basis, u0, table_b, opt_b).terminal().u;
    return (ub - ua).squaredNorm();
}

RateReport run_temporal_table(const ExperimentPlan& plan) {
    if (plan.mode != PlanMode::temporal) throw config_error("plan mode is not temporal");
    plan.validate();
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<std::int64_t> solve_set;
    const auto pairs = ladder_pairs(plan.ladder, solve_set);
    const PairErrors pe = temporal_engine(plan, solve_set, pairs);
    RateReport report;
    report.plan = plan;
    report.rungs = assemble_rungs(plan.ladder, pe);
    report.predicted_rate = plan.rates().temporal_rate();
    report.gamma = plan.rates().gamma();
    report.gamma_warning = !(report.gamma > 0.0);
    report.wall_seconds = elapsed_seconds(t0);
    return report;
}

RateReport run_spatial_table(const ExperimentPlan& plan) {
    if (plan.mode != PlanMode::spatial) throw config_error("plan mode is not spatial");
    plan.validate();
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<std::int64_t> solve_set;
    const auto pairs = ladder_pairs(plan.ladder, solve_set);
    const PairErrors pe = spatial_engine(plan, solve_set, pairs);
    RateReport report;
    report.plan = plan;
    report.rungs = assemble_rungs(plan.ladder, pe);
    report.predicted_rate = plan.rates().spatial_rate();
    report.gamma = plan.rates().gamma();
    report.gamma_warning = !(report.gamma > 0.0);
    report.wall_seconds = elapsed_seconds(t0);
    return report;
}

HolderReport holder_exponent(const ExperimentPlan& plan) {
    if (plan.mode != PlanMode::holder) throw config_error("plan mode is not holder");
    plan.validate();
    const auto t0 = std::chrono::steady_clock::now();
    TemperingParams tp = plan.tempering();
    std::vector<std::int64_t> lags = plan.holder_lags;
    std::sort(lags.begin(), lags.end());
    lags.erase(std::unique(lags.begin(), lags.end()), lags.end());

    const std::int64_t M = plan.steps;
    const TimeGrid grid{plan.horizon, M * plan.conv_substep_ratio};
    const SpectralBasis basis = build_basis(harness_dim, (int)plan.modes_per_dim);
    const Eigen::VectorXd u0 = default_initial_coeffs(basis);
    const std::vector<std::uint64_t> keys = basis_mode_keys(basis);
    const CholeskyFactor factor = cholesky(increment_covariance(tp, grid));
    const ModelConfig model = plan_model(plan, basis.size());
    model.validate();

    std::vector<std::int64_t> snaps;
    for (std::int64_t k : lags) snaps.push_back(M - k);
    snaps.push_back(M);
    std::sort(snaps.begin(), snaps.end());
    snaps.erase(std::unique(snaps.begin(), snaps.end()), snaps.end());

    const std::int64_t K = plan.trajectories;
    std::vector<std::vector<double>> ssq(lags.size(), std::vector<double>((size_t)K));
    run_parallel(K, [&](std::int64_t k) {
        IncrementTable table =
            sample_increments(factor, basis.size(), mix_key(plan.master_seed, (std::uint64_t)k), keys);
        SolveOptions opt;
        opt.snapshots = snaps;
        const Trajectory traj = solve_path(model, basis, u0, table, opt);
        const Eigen::VectorXd& terminal = traj.terminal().u;
        for (size_t j = 0; j < lags.size(); ++j) {
            const std::int64_t want = M - lags[j];
            const size_t pos =
                (size_t)(std::lower_bound(snaps.begin(), snaps.end(), want) - snaps.begin());
            ssq[j][(size_t)k] = (terminal - traj.states[pos].u).squaredNorm();
        }
    });

    HolderReport report;
    report.plan = plan;
    const double tau = plan.horizon / (double)M;
    std::vector<double> xs(lags.size()), ys(lags.size());
    for (size_t j = 0; j < lags.size(); ++j) {
        MeanStat s = mean_and_se(ssq[j]);
        if (!(s.mean > 0.0)) throw degenerate_error("zero mean-squared increment at a lag");
        report.lags.push_back({lags[j], (double)lags[j] * tau, s.mean, s.se});
        xs[j] = std::log((double)lags[j] * tau);
        ys[j] = std::log(s.mean);
    }
    double xbar = 0.0, ybar = 0.0;
    for (size_t j = 0; j < xs.size(); ++j) {
        xbar += xs[j];
        ybar += ys[j];
    }
    xbar /= (double)xs.size();
    ybar /= (double)ys.size();
    double sxy = 0.0, sxx = 0.0;
    for (size_t j = 0; j < xs.size(); ++j) {
        sxy += (xs[j] - xbar) * (ys[j] - ybar);
        sxx += (xs[j] - xbar) * (xs[j] - xbar);
    }
    report.estimate = 0.5 * sxy / sxx;
    report.target = plan.rates().min_h1();
    report.wall_seconds = elapsed_seconds(t0);
    return report;
}

ExperimentPlan preset(const std::string& name) {
    ExperimentPlan p;
    p.preset_name = name;
    if (name == "table1") {
        p.mode = PlanMode::temporal;
        p.alpha = 0.5;
        p.hurst = 0.4;
        p.mu = 1.0;
        p.rho = 0.75;
        p.horizon = 0.5;
        p.ladder = {32, 48, 72};
        p.modes_per_dim = 20;
        p.trajectories = 200;
        p.output = "table1.csv";
    } else if (name == "table2") {
        p.mode = PlanMode::temporal;
        p.alpha = 0.8;
        p.hurst = 0.6;
        p.mu = 0.5;
        p.rho = 0.4;
        p.horizon = 0.5;
        p.ladder = {32, 48, 72};
        p.modes_per_dim = 20;
        p.trajectories = 200;
        p.output = "table2.csv";
    } else if (name == "table3") {
        p.mode = PlanMode::spatial;
        p.alpha = 0.3;
        p.hurst = 0.35;
        p.mu = 0.5;
        p.rho = 0.75;
        p.horizon = 0.25;
        p.ladder = {16, 24, 36};
        p.steps = 1000;
        p.trajectories = 200;
        p.output = "table3.csv";
    } else if (name == "table4") {
        p.mode = PlanMode::spatial;
        p.alpha = 0.2;
        p.hurst = 0.8;
        p.mu = 0.5;
        p.rho = 0.75;
        p.horizon = 0.25;
        p.ladder = {16, 24, 36};
        p.steps = 1000;
        p.trajectories = 200;
        p.output = "table4.csv";
    } else if (name == "table5") {
        p.mode = PlanMode::spatial;
        p.alpha = 0.5;
        p.hurst = 1.2;
        p.mu = 0.5;
        p.rho = 0.75;
        p.horizon = 0.25;
        p.ladder = {16, 24, 36};
        p.steps = 1000;
        p.trajectories = 200;
        p.output = "table5.csv";
    } else if (name == "holder") {
        p.mode = PlanMode::holder;
        p.alpha = 0.5;
        p.hurst = 0.4;
        p.mu = 1.0;
        p.rho = 0.75;
        p.horizon = 0.5;
        p.modes_per_dim = 20;
        p.steps = 512;
        p.holder_lags = {1, 2, 4, 8, 16, 32};
        p.trajectories = 500;
        p.output = "holder.csv";
    } else {
        throw config_error("unknown preset: " + name);
    }
    return p;
}

void plan_set(ExperimentPlan& plan, const std::string& key, const std::string& value) {
    if (key == "alpha") plan.alpha = parse_f64(key, value);
    else if (key == "hurst") plan.hurst = parse_f64(key, value);
    else if (key == "mu") plan.mu = parse_f64(key, value);
    else if (key == "rho") plan.rho = parse_f64(key, value);
    else if (key == "horizon") plan.horizon = parse_f64(key, value);
    else if (key == "modes_per_dim") plan.modes_per_dim = parse_i64(key, value);
    else if (key == "steps") plan.steps = parse_i64(key, value);
    else if (key == "trajectories") plan.trajectories = parse_i64(key, value);
    else if (key == "seed") plan.master_seed = parse_u64(key, value);
    else if (key == "conv_substep_ratio") plan.conv_substep_ratio = parse_i64(key, value);
    else if (key == "output") plan.output = value;
    else if (key == "ladder") plan.ladder = parse_i64_list(key, value);
    else if (key == "lags") plan.holder_lags = parse_i64_list(key, value);
    else if (key == "preset") plan = preset(value);
    else if (key == "mode") {
        if (value == "temporal") plan.mode = PlanMode::temporal;
        else if (value == "spatial") plan.mode = PlanMode::spatial;
        else if (value == "holder") plan.mode = PlanMode::holder;
        else throw config_error("invalid value for mode: " + value);
    } else {
        throw config_error("unknown config key: " + key);
    }
}

std::string plan_get(const ExperimentPlan& plan, const std::string& key) {
    if (key == "alpha") return fmt_f64(plan.alpha);
    if (key == "hurst") return fmt_f64(plan.hurst);
    if (key == "mu") return fmt_f64(plan.mu);
    if (key == "rho") return fmt_f64(plan.rho);
    if (key == "horizon") return fmt_f64(plan.horizon);
    if (key == "modes_per_dim") return std::to_string(plan.modes_per_dim);
    if (key == "steps") return std::to_string(plan.steps);
    if (key == "trajectories") return std::to_string(plan.trajectories);
    if (key == "seed") return std::to_string(plan.master_seed);
    if (key == "conv_substep_ratio") return std::to_string(plan.conv_substep_ratio);
    if (key == "output") return plan.output;
    if (key == "ladder") return join_i64(plan.ladder);
    if (key == "lags") return join_i64(plan.holder_lags);
    if (key == "preset") return plan.preset_name;
    if (key == "mode") return mode_name(plan.mode);
    throw config_error("unknown config key: " + key);
}

ExperimentPlan plan_from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file: " + path);
    std::vector<std::pair<std::string, std::string>> kv;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trimmed(line);
        if (line.empty()) continue;
        size_t sep = line.find('=');
        if (sep == std::string::npos) sep = line.find_first_of(" \t");
        if (sep == std::string::npos)
            throw config_error("malformed config line " + std::to_string(lineno) + ": " + line);
        const std::string key = trimmed(line.substr(0, sep));
        const std::string value = trimmed(line.substr(sep + 1));
        if (key.empty() || value.empty())
            throw config_error("malformed config line " + std::to_string(lineno) + ": " + line);
        kv.emplace_back(key, value);
    }
    ExperimentPlan plan;
    for (const auto& [k, v] : kv)
        if (k == "preset") plan = preset(v);
    for (const auto& [k, v] : kv)
        if (k != "preset") plan_set(plan, k, v);
    return plan;
}

void write_rate_csv(const RateReport& report, const std::string& path) {
    std::ofstream out = open_out(path);
    out << (report.plan.mode == PlanMode::spatial ? "N,error,rate\n" : "M,error,rate\n");
    char buf[96];
    for (const RungStat& r : report.rungs) {
        if (std::isnan(r.rate))
            std::snprintf(buf, sizeof(buf), "%lld,%.5e,\n", (long long)r.resolution, r.error);
        else
            std::snprintf(buf, sizeof(buf), "%lld,%.5e,%.3f\n", (long long)r.resolution, r.error,
                          r.rate);
        out << buf;
    }
}

void write_rate_json(const RateReport& report, const std::string& path) {
    json j;
    j["plan"] = plan_to_json(report.plan);
    j["trajectories"] = report.plan.trajectories;
    j["seed"] = report.plan.master_seed;
    j["predicted_rate"] = report.predicted_rate;
    j["gamma"] = report.gamma;
    j["gamma_warning"] = report.gamma_warning;
    j["rungs"] = json::array();
    for (const RungStat& r : report.rungs) {
        json row;
        row["resolution"] = r.resolution;
        row["error"] = r.error;
        row["rate"] = std::isnan(r.rate) ? json(nullptr) : json(r.rate);
        row["stderr"] = r.se;
        j["rungs"].push_back(row);
    }
    j["wall_seconds"] = report.wall_seconds;
    std::ofstream out = open_out(path);
    out << j.dump(2) << "\n";
}

void write_holder_csv(const HolderReport& report, const std::string& path) {
    std::ofstream out = open_out(path);
    out << "lag_steps,lag_time,mean_sq_diff,stderr\n";
    char buf[128];
    for (const HolderLag& l : report.lags) {
        std::snprintf(buf, sizeof(buf), "%lld,%.17g,%.5e,%.5e\n", (long long)l.lag_steps,
                      l.lag_time, l.mean_sq, l.se);
        out << buf;
    }
}

void write_holder_json(const HolderReport& report, const std::string& path) {
    json j;
    j["plan"] = plan_to_json(report.plan);
    j["trajectories"] = report.plan.trajectories;
    j["seed"] = report.plan.master_seed;
    j["lags"] = json::array();
    for (const HolderLag& l : report.lags) {
        json row;
        row["lag_steps"] = l.lag_steps;
        row["lag_time"] = l.lag_time;
        row["mean_sq_diff"] = l.mean_sq;
        row["stderr"] = l.se;
        j["lags"].push_back(row);
    }
    j["estimate"] = report.estimate;
    j["target"] = report.target;
    j["wall_seconds"] = report.wall_seconds;
    std::ofstream out = open_out(path);
    out << j.dump(2) << "\n";
}

int worker_count() {
    if (const char* env = std::getenv("TFSDE_THREADS")) {
        char* end = nullptr;
        long v = std::strtol(env, &end, 10);
        if (end == env || *end != '\0' || v < 1 || v > 1024)
            throw config_error("TFSDE_THREADS must be an integer in [1, 1024]");
        return (int)v;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : (int)hw;
}

double pairwise_sum(const double* v, std::int64_t n) {
    if (n <= 16) {
        double s = 0.0;
        for (std::int64_t i = 0; i < n; ++i) s += v[i];
        return s;
    }
    const std::int64_t half = n / 2;
    return pairwise_sum(v, half) + pairwise_sum(v + half, n - half);
}

} // namespace tfsde
