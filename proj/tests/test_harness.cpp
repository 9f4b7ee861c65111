#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "errors.hpp"
#include "harness.hpp"
#include "rng.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

using namespace tfsde;

namespace {

double x_squared_coeff(int i) {
    const double pi = 3.141592653589793238462643383279502884;
    const double sgn = (i % 2 == 0) ? 1.0 : -1.0;
    return std::sqrt(2.0) *
           (-sgn / ((double)i * pi) + 2.0 * (sgn - 1.0) / std::pow((double)i * pi, 3));
}

std::uint64_t tuple_key(const std::array<int, 3>& m) {
    return (static_cast<std::uint64_t>(m[0]) << 42) | (static_cast<std::uint64_t>(m[1]) << 21) |
           static_cast<std::uint64_t>(m[2]);
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

struct EnvGuard {
    std::string name;
    std::string saved;
    bool had;
    explicit EnvGuard(const char* var) : name(var) {
        const char* v = std::getenv(var);
        had = v != nullptr;
        if (had) saved = v;
    }
    ~EnvGuard() {
        if (had)
            setenv(name.c_str(), saved.c_str(), 1);
        else
            unsetenv(name.c_str());
    }
};

} // namespace

TEST_CASE("convergence_rate reproduces the documented readings") {
    CHECK(std::fabs(convergence_rate(8.895e-2, 7.578e-2) - 0.395) < 2e-3);
    CHECK(std::fabs(convergence_rate(7.578e-2, 6.420e-2) - 0.409) < 2e-3);
}

TEST_CASE("convergence_rate inverts exact geometric decay") {
    for (double r : {0.4, 1.0, 2.3, -0.5}) {
        const double e0 = 0.37;
        const double e1 = e0 * std::pow(1.5, -r);
        CHECK(convergence_rate(e0, e1) == doctest::Approx(r).epsilon(1e-12));
    }
    CHECK(convergence_rate(0.2, 0.2) == 0.0);
    CHECK_THROWS_AS(convergence_rate(0.0, 0.1), degenerate_error);
    CHECK_THROWS_AS(convergence_rate(0.1, 0.0), degenerate_error);
    CHECK_THROWS_AS(convergence_rate(-0.1, 0.1), degenerate_error);
}

TEST_CASE("rate model evaluates the predicted exponents") {
    const RateModel a{0.5, 0.4, 0.75};
    CHECK(a.min_h1() == 0.4);
    CHECK(a.gamma() == doctest::Approx(0.9).epsilon(1e-15));
    CHECK(a.temporal_rate() == 0.4); // rho > 1/2 branch
    CHECK(a.spatial_rate() == doctest::Approx(0.9).epsilon(1e-15));

    const RateModel b{0.8, 1.6, 0.4};
    CHECK(b.min_h1() == 1.0);
    CHECK(b.gamma() == doctest::Approx(2.0 * 0.4 - 1.0 + 2.0 * 0.8).epsilon(1e-15));
    CHECK(b.temporal_rate() == doctest::Approx(b.gamma() / 1.6).epsilon(1e-15));

    const RateModel c{0.3, 0.4, 0.0};
    CHECK(c.gamma() == doctest::Approx(-1.0 + 0.6 * 0.4).epsilon(1e-15));
    CHECK(c.temporal_rate() == doctest::Approx(c.gamma() / 0.6).epsilon(1e-15));
}

TEST_CASE("default initial coefficients match the separable closed form") {
    const SpectralBasis b = build_basis(2, 4);
    const Eigen::VectorXd c = default_initial_coeffs(b);
    for (std::int64_t m = 0; m < b.size(); ++m) {
        const auto& idx = b.modes[(size_t)m];
        const double want = x_squared_coeff(idx[0]) * x_squared_coeff(idx[1]);
        CHECK(c[m] == doctest::Approx(want).epsilon(1e-11).scale(1e-2));
    }
}

TEST_CASE("mc_error vanishes when both resolutions coincide") {
    ExperimentPlan t;
    t.mode = PlanMode::temporal;
    t.modes_per_dim = 3;
    t.trajectories = 2;
    t.horizon = 0.5;
    t.hurst = 0.8;
    CHECK(mc_error(t, 8, 8) == 0.0);

    ExperimentPlan s = t;
    s.mode = PlanMode::spatial;
    s.steps = 6;
    CHECK(mc_error(s, 4, 4) == 0.0);

    ExperimentPlan h = t;
    h.mode = PlanMode::holder;
    CHECK_THROWS_AS(mc_error(h, 8, 12), config_error);
    CHECK_THROWS_AS(mc_error(t, 0, 8), config_error);
}

TEST_CASE("deterministic single-mode runs follow the implicit-Euler closed form") {
    ExperimentPlan plan;
    plan.mode = PlanMode::temporal;
    plan.alpha = 0.5;
    plan.hurst = 0.8;
    plan.mu = 1.0;
    plan.horizon = 0.5;
    plan.modes_per_dim = 1;
    plan.trajectories = 1;
    plan.zero_noise = true;
    plan.zero_forcing = true;
    const double lam_a = std::sqrt(2.0) * 3.141592653589793238462643383279502884;
    const double c = x_squared_coeff(1) * x_squared_coeff(1);
    const double za = c * std::pow(1.0 + (0.5 / 4.0) * lam_a, -4.0);
    const double zb = c * std::pow(1.0 + (0.5 / 6.0) * lam_a, -6.0);
    CHECK(mc_error(plan, 4, 6) == doctest::Approx(std::fabs(zb - za)).epsilon(1e-12));
}

TEST_CASE("temporal refinement error matches the exact coupled value") {
    ExperimentPlan plan;
    plan.mode = PlanMode::temporal;
    plan.alpha = 0.5;
    plan.hurst = 0.4;
    plan.mu = 1.0;
    plan.rho = 0.75;
    plan.horizon = 0.5;
    plan.modes_per_dim = 6;
    plan.trajectories = 400;
    plan.master_seed = 11;
    const double e_exact = 9.141575274777036936e-03;
    CHECK(std::fabs(mc_error(plan, 8, 12) - e_exact) < 4.650239e-04);
    plan.trajectories = 800;
    CHECK(std::fabs(mc_error(plan, 8, 12) - e_exact) < 3.288315e-04);
}

TEST_CASE("spatial refinement error matches the exact coupled value") {
    ExperimentPlan plan;
    plan.mode = PlanMode::spatial;
    plan.alpha = 0.5;
    plan.hurst = 0.8;
    plan.mu = 0.5;
    plan.rho = 0.75;
    plan.horizon = 0.25;
    plan.steps = 50;
    plan.trajectories = 400;
    plan.master_seed = 13;
    const double e_exact = 3.726199907264134831e-03;
    CHECK(std::fabs(mc_error(plan, 4, 6) - e_exact) < 1.432052e-04);
}

TEST_CASE("coupled pairs agree with the monte carlo engine on one trajectory") {
    ExperimentPlan plan;
    plan.mode = PlanMode::temporal;
    plan.alpha = 0.5;
    plan.hurst = 0.8;
    plan.mu = 1.0;
    plan.rho = 0.75;
    plan.horizon = 0.5;
    plan.modes_per_dim = 3;
    plan.trajectories = 1;
    plan.master_seed = 17;

    const SpectralBasis basis = build_basis(2, 3);
    std::vector<std::uint64_t> keys;
    for (const auto& m : basis.modes) keys.push_back(tuple_key(m));
    const CholeskyFactor factor =
        cholesky(increment_covariance(plan.tempering(), {plan.horizon, 12}));
    const IncrementTable fine =
        sample_increments(factor, basis.size(), mix_key(plan.master_seed, 0), keys);
    const IncrementTable coarse = coarsen(fine, 2);

    const double sq = coupled_pair_sq_error(plan, 12, fine, 6, coarse);
    const double e = mc_error(plan, 12, 6);
    CHECK(e * e == doctest::Approx(sq).epsilon(1e-13));
}

TEST_CASE("coupled pairs reject decoupled or corrupted noise") {
    ExperimentPlan plan;
    plan.mode = PlanMode::temporal;
    plan.hurst = 0.8;
    plan.horizon = 1.0;
    plan.modes_per_dim = 2;

    const CholeskyFactor f12 = cholesky(increment_covariance(plan.tempering(), {1.0, 12}));
    const CholeskyFactor f9 = cholesky(increment_covariance(plan.tempering(), {1.0, 9}));
    const IncrementTable fine = sample_increments(f12, 4, 5);
    const IncrementTable other_seed = sample_increments(f12, 4, 6);
    const IncrementTable coarse = coarsen(fine, 2);

    CHECK_THROWS_AS(coupled_pair_sq_error(plan, 12, fine, 6, other_seed), protocol_error);

    IncrementTable nine = sample_increments(f9, 4, 5);
    CHECK_THROWS_AS(coupled_pair_sq_error(plan, 12, fine, 9, nine), protocol_error);

    IncrementTable bad = coarse;
    bad.data(0, 0) += 1e-6;
    CHECK_THROWS_AS(coupled_pair_sq_error(plan, 12, fine, 6, bad), protocol_error);

    IncrementTable shuffled = fine;
    shuffled.data(0, 0) += 1e-6;
    CHECK_THROWS_AS(coupled_pair_sq_error(plan, 12, fine, 12, shuffled), protocol_error);

    IncrementTable stretched = coarse;
    stretched.grid.horizon = 2.0;
    CHECK_THROWS_AS(coupled_pair_sq_error(plan, 12, fine, 6, stretched), protocol_error);

    CHECK_THROWS_AS(coupled_pair_sq_error(plan, 10, fine, 6, coarse), shape_error);

    CHECK_NOTHROW(coupled_pair_sq_error(plan, 12, fine, 6, coarse));
}

TEST_CASE("deterministic temporal tables refine at first order or better") {
    ExperimentPlan plan;
    plan.mode = PlanMode::temporal;
    plan.alpha = 0.5;
    plan.hurst = 0.8;
    plan.horizon = 0.5;
    plan.modes_per_dim = 4;
    plan.trajectories = 1;
    plan.zero_noise = true;
    plan.ladder = {8, 12, 18};
    const RateReport report = run_temporal_table(plan);
    REQUIRE(report.rungs.size() == 3);
    CHECK(report.rungs[0].resolution == 8);
    CHECK(report.rungs[2].resolution == 18);
    CHECK(std::isnan(report.rungs[0].rate));
    for (size_t j = 1; j < 3; ++j) {
        CHECK(report.rungs[j].error < report.rungs[j - 1].error);
        CHECK(report.rungs[j].rate > 0.99);
    }
    CHECK(report.predicted_rate == plan.rates().temporal_rate());
    CHECK(report.gamma == doctest::Approx(plan.rates().gamma()).epsilon(1e-15));
    CHECK_FALSE(report.gamma_warning);
    CHECK(report.wall_seconds >= 0.0);

    // writer round trip
    const std::string csv = "harness_test_rates.csv";
    const std::string js = "harness_test_rates.json";
    write_rate_csv(report, csv);
    write_rate_json(report, js);

    std::ifstream in(csv);
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line == "M,error,rate");
    REQUIRE(std::getline(in, line));
    CHECK(line.substr(0, 2) == "8,");
    CHECK(line.back() == ','); // first rung carries no rate
    REQUIRE(std::getline(in, line));
    CHECK(line.substr(0, 3) == "12,");
    CHECK(line.back() != ',');
    in.close();

    const nlohmann::json j = nlohmann::json::parse(slurp(js));
    CHECK(j["plan"]["mode"] == "temporal");
    CHECK(j["plan"]["alpha"] == 0.5);
    CHECK(j["plan"]["zero_noise"] == true);
    CHECK((j["plan"]["ladder"] == std::vector<std::int64_t>{8, 12, 18}));
    CHECK(j["trajectories"] == 1);
    CHECK(j["seed"] == 1);
    CHECK(j["rungs"].size() == 3);
    CHECK(j["rungs"][0]["rate"].is_null());
    CHECK(j["rungs"][1]["rate"].is_number());
    CHECK(j["rungs"][0]["error"].is_number());
    CHECK(j["rungs"][0]["stderr"].is_number());
    CHECK(j["predicted_rate"] == report.predicted_rate);
    CHECK(j["gamma_warning"] == false);
    CHECK(j["wall_seconds"].is_number());
    std::remove(csv.c_str());
    std::remove(js.c_str());
}

TEST_CASE("spatial reports label resolutions as mode counts") {
    ExperimentPlan plan;
    plan.mode = PlanMode::spatial;
    plan.alpha = 0.5;
    plan.hurst = 0.8;
    plan.horizon = 0.25;
    plan.steps = 8;
    plan.modes_per_dim = 4;
    plan.trajectories = 1;
    plan.zero_noise = true;
    plan.ladder = {8, 12, 18};
    const RateReport report = run_spatial_table(plan);
    REQUIRE(report.rungs.size() == 3);
    CHECK(report.predicted_rate == doctest::Approx(plan.rates().gamma()).epsilon(1e-15));
    for (size_t j = 1; j < 3; ++j) CHECK(report.rungs[j].error < report.rungs[j - 1].error);

    const std::string csv = "harness_test_spatial.csv";
    write_rate_csv(report, csv);
    std::ifstream in(csv);
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line == "N,error,rate");
    in.close();
    std::remove(csv.c_str());
}

TEST_CASE("gamma warnings flag parameter sets outside the standing condition") {
    ExperimentPlan plan;
    plan.mode = PlanMode::temporal;
    plan.alpha = 0.3;
    plan.hurst = 0.4;
    plan.rho = 0.0;
    plan.horizon = 0.5;
    plan.modes_per_dim = 2;
    plan.trajectories = 1;
    plan.zero_noise = true;
    plan.ladder = {8, 12, 18};
    const RateReport report = run_temporal_table(plan);
    CHECK(report.gamma < 0.0);
    CHECK(report.gamma_warning);
}

TEST_CASE("per-trajectory work is independent of the worker count") {
    EnvGuard guard("TFSDE_THREADS");
    ExperimentPlan plan;
    plan.mode = PlanMode::temporal;
    plan.alpha = 0.5;
    plan.hurst = 0.4;
    plan.horizon = 0.5;
    plan.modes_per_dim = 3;
    plan.trajectories = 4;
    plan.master_seed = 21;
    plan.ladder = {8, 12, 18};

    setenv("TFSDE_THREADS", "3", 1);
    const RateReport threaded = run_temporal_table(plan);
    setenv("TFSDE_THREADS", "1", 1);
    const RateReport serial = run_temporal_table(plan);
    REQUIRE(threaded.rungs.size() == serial.rungs.size());
    for (size_t j = 0; j < serial.rungs.size(); ++j) {
        CHECK(threaded.rungs[j].error == serial.rungs[j].error);
        CHECK(threaded.rungs[j].se == serial.rungs[j].se);
    }
}

TEST_CASE("worker_count validates its environment override") {
    EnvGuard guard("TFSDE_THREADS");
    setenv("TFSDE_THREADS", "4", 1);
    CHECK(worker_count() == 4);
    setenv("TFSDE_THREADS", "abc", 1);
    CHECK_THROWS_AS(worker_count(), config_error);
    setenv("TFSDE_THREADS", "0", 1);
    CHECK_THROWS_AS(worker_count(), config_error);
    setenv("TFSDE_THREADS", "2000", 1);
    CHECK_THROWS_AS(worker_count(), config_error);
    setenv("TFSDE_THREADS", "7 ", 1);
    CHECK_THROWS_AS(worker_count(), config_error);
    unsetenv("TFSDE_THREADS");
    CHECK(worker_count() >= 1);
}

TEST_CASE("smooth paths show a quadratic mean-square modulus") {
    ExperimentPlan plan;
    plan.mode = PlanMode::holder;
    plan.alpha = 0.5;
    plan.hurst = 0.4;
    plan.horizon = 0.5;
    plan.modes_per_dim = 4;
    plan.steps = 64;
    plan.trajectories = 1;
    plan.zero_noise = true;
    plan.holder_lags = {1, 2, 4, 8};
    const HolderReport report = holder_exponent(plan);
    REQUIRE(report.lags.size() == 4);
    CHECK(report.lags[0].lag_steps == 1);
    CHECK(report.lags[0].lag_time == doctest::Approx(0.5 / 64.0).epsilon(1e-15));
    CHECK(report.estimate > 0.99); // deterministic drift is Lipschitz in time
    CHECK(report.target == plan.rates().min_h1());
    for (size_t j = 1; j < report.lags.size(); ++j)
        CHECK(report.lags[j].mean_sq > report.lags[j - 1].mean_sq);

    const std::string csv = "harness_test_holder.csv";
    const std::string js = "harness_test_holder.json";
    write_holder_csv(report, csv);
    write_holder_json(report, js);
    std::ifstream in(csv);
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line == "lag_steps,lag_time,mean_sq_diff,stderr");
    std::int64_t rows = 0;
    while (std::getline(in, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 4);
    in.close();
    const nlohmann::json j = nlohmann::json::parse(slurp(js));
    CHECK(j["plan"]["mode"] == "holder");
    CHECK(j["lags"].size() == 4);
    CHECK(j["estimate"].is_number());
    CHECK(j["target"] == 0.4);
    std::remove(csv.c_str());
    std::remove(js.c_str());
}

TEST_CASE("holder plans validate their lag sets") {
    ExperimentPlan plan;
    plan.mode = PlanMode::holder;
    plan.steps = 64;
    plan.hurst = 0.8;
    plan.holder_lags = {1, 2};
    CHECK_THROWS_AS(plan.validate(), config_error);
    plan.holder_lags = {1, 1, 2}; // duplicates collapse below the minimum
    CHECK_THROWS_AS(plan.validate(), config_error);
    plan.holder_lags = {0, 1, 2};
    CHECK_THROWS_AS(plan.validate(), config_error);
    plan.holder_lags = {1, 2, 64};
    CHECK_THROWS_AS(plan.validate(), config_error);
    plan.holder_lags = {1, 2, 63};
    CHECK_NOTHROW(plan.validate());
}

TEST_CASE("ladder validation pins the 3/2 refinement geometry") {
    ExperimentPlan plan;
    plan.mode = PlanMode::temporal;
    plan.hurst = 0.8;
    plan.ladder = {8, 13, 18};
    CHECK_THROWS_AS(plan.validate(), config_error);
    plan.ladder = {8, 12};
    CHECK_THROWS_AS(plan.validate(), config_error);
    plan.ladder = {12, 18, 27}; // the implied next rung 40.5 is not integral
    CHECK_THROWS_AS(plan.validate(), config_error);
    plan.ladder = {1, 2, 3};
    CHECK_THROWS_AS(plan.validate(), config_error);
    plan.ladder = {8, 12, 18};
    CHECK_NOTHROW(plan.validate());
    plan.trajectories = 0;
    CHECK_THROWS_AS(plan.validate(), config_error);
}

TEST_CASE("run_* entry points check the plan mode") {
    ExperimentPlan plan;
    plan.hurst = 0.8;
    plan.ladder = {8, 12, 18};
    plan.mode = PlanMode::spatial;
    CHECK_THROWS_AS(run_temporal_table(plan), config_error);
    plan.mode = PlanMode::temporal;
    CHECK_THROWS_AS(run_spatial_table(plan), config_error);
    CHECK_THROWS_AS(holder_exponent(plan), config_error);
}

TEST_CASE("presets carry the published experiment settings") {
    const ExperimentPlan t1 = preset("table1");
    CHECK(t1.mode == PlanMode::temporal);
    CHECK(t1.alpha == 0.5);
    CHECK(t1.hurst == 0.4);
    CHECK(t1.mu == 1.0);
    CHECK(t1.rho == 0.75);
    CHECK(t1.horizon == 0.5);
    CHECK((t1.ladder == std::vector<std::int64_t>{32, 48, 72}));
    CHECK(t1.modes_per_dim == 20);
    CHECK(t1.trajectories == 200);
    CHECK(t1.output == "table1.csv");
    CHECK(t1.preset_name == "table1");
    CHECK_NOTHROW(t1.validate());

    const ExperimentPlan t2 = preset("table2");
    CHECK(t2.alpha == 0.8);
    CHECK(t2.rho == 0.4);

    const ExperimentPlan t3 = preset("table3");
    CHECK(t3.mode == PlanMode::spatial);
    CHECK(t3.alpha == 0.3);
    CHECK(t3.hurst == 0.35);
    CHECK(t3.steps == 1000);
    CHECK((t3.ladder == std::vector<std::int64_t>{16, 24, 36}));
    CHECK(t3.horizon == 0.25);
    CHECK_NOTHROW(t3.validate());

    CHECK(preset("table4").hurst == 0.8);
    CHECK(preset("table5").hurst == 1.2);

    const ExperimentPlan h = preset("holder");
    CHECK(h.mode == PlanMode::holder);
    CHECK(h.steps == 512);
    CHECK((h.holder_lags == std::vector<std::int64_t>{1, 2, 4, 8, 16, 32}));
    CHECK(h.trajectories == 500);
    CHECK_NOTHROW(h.validate());

    CHECK_THROWS_AS(preset("table9"), config_error);
}

TEST_CASE("plan files apply the preset first and overrides afterwards") {
    const std::string path = "harness_test_plan.cfg";
    {
        std::ofstream out(path);
        out << "# experiment configuration\n";
        out << "\n";
        out << "hurst = 0.8   # listed before the preset on purpose\n";
        out << "preset = table1\n";
        out << "trajectories 50\n";
        out << "seed = 9\n";
    }
    const ExperimentPlan plan = plan_from_file(path);
    CHECK(plan.preset_name == "table1");
    CHECK(plan.hurst == 0.8); // override wins even though it precedes the preset
    CHECK(plan.trajectories == 50);
    CHECK(plan.master_seed == 9);
    CHECK(plan.alpha == 0.5);
    CHECK((plan.ladder == std::vector<std::int64_t>{32, 48, 72}));
    std::remove(path.c_str());

    {
        std::ofstream out(path);
        out << "alpha = 0.5\n";
        out << "just-a-token\n";
    }
    CHECK_THROWS_WITH_AS(plan_from_file(path), "malformed config line 2: just-a-token",
                         config_error);
    std::remove(path.c_str());

    {
        std::ofstream out(path);
        out << "frequency = 3\n";
    }
    CHECK_THROWS_AS(plan_from_file(path), config_error);
    std::remove(path.c_str());

    CHECK_THROWS_AS(plan_from_file("no_such_plan.cfg"), config_error);
}

TEST_CASE("plan keys round-trip through set and get") {
    ExperimentPlan plan;
    plan_set(plan, "alpha", "0.6");
    plan_set(plan, "hurst", "1.2");
    plan_set(plan, "mu", "0.5");
    plan_set(plan, "rho", "1.25");
    plan_set(plan, "horizon", "0.25");
    plan_set(plan, "modes_per_dim", "12");
    plan_set(plan, "steps", "96");
    plan_set(plan, "trajectories", "7");
    plan_set(plan, "seed", "12345");
    plan_set(plan, "conv_substep_ratio", "2");
    plan_set(plan, "output", "out.csv");
    plan_set(plan, "ladder", "8,12,18");
    plan_set(plan, "lags", "1 2 4");
    plan_set(plan, "mode", "spatial");

    CHECK(plan_get(plan, "alpha") == "0.59999999999999998");
    CHECK(plan.alpha == 0.6);
    CHECK(plan.hurst == 1.2);
    CHECK(plan_get(plan, "modes_per_dim") == "12");
    CHECK(plan_get(plan, "steps") == "96");
    CHECK(plan_get(plan, "seed") == "12345");
    CHECK(plan_get(plan, "output") == "out.csv");
    CHECK(plan_get(plan, "ladder") == "8,12,18");
    CHECK(plan_get(plan, "lags") == "1,2,4");
    CHECK(plan_get(plan, "mode") == "spatial");
    CHECK(plan_get(plan, "preset") == "");

    CHECK_THROWS_AS(plan_set(plan, "alpha", "fast"), config_error);
    CHECK_THROWS_AS(plan_set(plan, "steps", "12x"), config_error);
    CHECK_THROWS_AS(plan_set(plan, "ladder", ""), config_error);
    CHECK_THROWS_AS(plan_set(plan, "mode", "sideways"), config_error);
    CHECK_THROWS_AS(plan_set(plan, "colour", "blue"), config_error);
    CHECK_THROWS_AS(plan_get(plan, "colour"), config_error);

    plan_set(plan, "preset", "table3");
    CHECK(plan.preset_name == "table3");
    CHECK(plan.alpha == 0.3); // preset replaces the whole plan
}

TEST_CASE("pairwise summation matches a high-precision accumulator") {
    std::vector<double> v(1000);
    std::uint64_t s = 3;
    long double ref = 0.0L;
    for (size_t i = 0; i < v.size(); ++i) {
        v[i] = ((double)(splitmix64(s) >> 11) * 0x1.0p-53 - 0.5) * 0.37;
        ref += (long double)v[i];
    }
    CHECK(std::fabs(pairwise_sum(v.data(), (std::int64_t)v.size()) - (double)ref) < 1e-12);
    CHECK(pairwise_sum(v.data(), 0) == 0.0);
    CHECK(pairwise_sum(v.data(), 1) == v[0]);
}
