#include <doctest.h>

#include <cstdlib>
#include <filesystem>

#include "physcal/error.hpp"
#include "physcal/experiment.hpp"

using namespace physcal;
using nlohmann::json;

namespace {

ExperimentConfig small_config(const std::string& dir) {
    json j = {{"problem", "benchmark_2d"},
              {"pool", {{"size", 100}}},
              {"init", {{"size", 10}, {"lhd_restarts", 10}}},
              {"test", {{"size", 30}}},
              {"N", 4},
              {"replications", 2},
              {"seed", 7},
              {"fit", {{"starts", 2}}},
              {"strategies", {"physcal", "random"}},
              {"jobs", 1},
              {"output_dir", dir}};
    return config_from_json(j);
}

std::string temp_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("physcal_test_" + name);
    std::filesystem::remove_all(dir);
    return dir.string();
}

RunSummary run_row(const std::string& strategy, int rep, double mae, double mse, int fails) {
    RunSummary r;
    r.strategy = strategy;
    r.replication = rep;
    r.status = "completed";
    r.mae = mae;
    r.mse = mse;
    r.add_failures = fails;
    r.target_model.lengthscales = {0.1, 0.2};
    return r;
}

}  // namespace

TEST_CASE("config parsing") {
    const ExperimentConfig def = config_from_json(json::object());
    CHECK(def.pool_size == 400);
    CHECK(def.init_size == 10);
    CHECK(def.test_size == 100);
    CHECK(def.strategies.size() == 5);

    json j = {{"problem", {{"name", "benchmark_2d"}, {"xi", 0.6}}},
              {"safety", {{"gamma", 0.05}}},
              {"acquisition", {{"w", 0.3}, {"normalization", "bounds"}}},
              {"strategies",
               json::array({"alc", {{"kind", "physcal"}, {"label", "p7"}, {"acquisition", {{"w", 0.7}}}}})}};
    const ExperimentConfig cfg = config_from_json(j);
    REQUIRE(cfg.strategies.size() == 2);
    CHECK(cfg.xi.value() == 0.6);
    CHECK(cfg.strategies[0].safety.gamma == 0.05);
    CHECK(cfg.strategies[0].acq.w == 0.3);
    CHECK(cfg.strategies[1].name() == "p7");
    CHECK(cfg.strategies[1].acq.w == 0.7);
    CHECK(cfg.strategies[1].acq.normalization == Normalization::bounds);

    // serialization round trip
    const ExperimentConfig again = config_from_json(config_to_json(cfg));
    CHECK(config_to_json(again) == config_to_json(cfg));

    CHECK_THROWS_AS(config_from_json({{"replicaitons", 3}}), ConfigError);
    CHECK_THROWS_AS(config_from_json({{"replications", 0}}), ConfigError);
    CHECK_THROWS_AS(config_from_json({{"strategies", {"physcal", "physcal"}}}), ConfigError);
    CHECK_THROWS_AS(config_from_json({{"strategies", {"segp"}}}), ConfigError);
    CHECK_THROWS_AS(config_from_json({{"pool", {{"generation", "sobol"}}}}), ConfigError);
}

TEST_CASE("environment overrides") {
    const std::string dir = temp_dir("env");
    std::filesystem::create_directories(dir);
    const std::string path = dir + "/cfg.json";
    write_text_file(path, R"({"replications": 1, "output_dir": "somewhere"})");
    setenv("PHYSCAL_OUTPUT_DIR", "/tmp/elsewhere", 1);
    setenv("PHYSCAL_JOBS", "3", 1);
    const ExperimentConfig cfg = load_config(path);
    unsetenv("PHYSCAL_OUTPUT_DIR");
    unsetenv("PHYSCAL_JOBS");
    CHECK(cfg.output_dir == "/tmp/elsewhere");
    CHECK(cfg.jobs == 3);
    CHECK(load_config(path).output_dir == "somewhere");
    write_text_file(path, "{ not json");
    CHECK_THROWS_AS(load_config(path), ConfigError);
}

TEST_CASE("metrics") {
    Eigen::MatrixXd X(1, 3);
    X << 0.1, 0.5, 0.9;
    KernelParams p;
    p.lengthscales = Eigen::VectorXd::Constant(1, 0.2);
    p.nugget = 0.0;
    TestSet test;
    test.X = X;

    // constant-zero predictor against labels equal to 2
    const GPModel zero = GPModel::condition(p, X, Eigen::VectorXd::Zero(3));
    test.y = Eigen::VectorXd::Constant(3, 2.0);
    RunTrace trace;
    Metrics m = compute_metrics(trace, zero, test);
    CHECK(m.mae == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(m.mse == doctest::Approx(4.0).epsilon(1e-9));

    // interpolating model evaluated at its own inputs
    test.y = Eigen::Vector3d(0.3, -0.1, 0.6);
    const GPModel exact = GPModel::condition(p, X, test.y);
    m = compute_metrics(trace, exact, test);
    CHECK(m.mse < 1e-12);
    CHECK(m.mae < 1e-6);

    trace.records.resize(20);
    trace.records[13].true_safe = false;
    CHECK(compute_metrics(trace, exact, test).add_failures == 1);
}

TEST_CASE("aggregates recompute from the per-run values") {
    const std::vector<RunSummary> runs{run_row("a", 0, 1.0, 2.0, 0), run_row("a", 1, 3.0, 4.0, 2),
                                       run_row("b", 0, 5.0, 6.0, 1)};
    const auto agg = aggregate_runs(runs, {"a", "b"});
    REQUIRE(agg.size() == 2);
    CHECK(agg[0].mean_mae == 2.0);
    CHECK(agg[0].std_mae == doctest::Approx(std::sqrt(2.0)));
    CHECK(agg[0].mean_failures == 1.0);
    CHECK(agg[0].zero_failure_runs == 1);
    CHECK(agg[1].runs == 1);
    CHECK(agg[1].std_mse == 0.0);
}

TEST_CASE("reports") {
    SummaryReport s;
    s.problem = "benchmark_2d";
    s.replications = 3;
    const std::string empty = render_markdown(s);
    CHECK(std::count(empty.begin(), empty.end(), '\n') == 2);

    s.strategies = {"physcal", "alc"};
    for (int r = 0; r < 3; ++r) {
        s.runs.push_back(run_row("physcal", r, 0.1 * (r + 1), 0.01 * (r + 1), r == 1 ? 1 : 0));
        s.runs.push_back(run_row("alc", r, 0.2 * (r + 1), 0.02 * (r + 1), 6));
    }
    s.aggregates = aggregate_runs(s.runs, s.strategies);
    const std::string md = render_markdown(s);
    // header, separator, 3 body rows, Mean and (Std.) footer
    CHECK(std::count(md.begin(), md.end(), '\n') == 7);
    CHECK(md.find("| Mean |") != std::string::npos);
    CHECK(md.find("| (Std.) |") != std::string::npos);
    CHECK(md.find("physcal # Add. Fail") != std::string::npos);

    const std::string csv = render_csv(s);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 7);

    const SummaryReport back = summary_from_json(json::parse(render_json(s)));
    CHECK(back == s);
    CHECK(render(s, report_format_from_string("md")) == md);
    CHECK_THROWS_AS(report_format_from_string("pdf"), ConfigError);
    json bad = summary_to_json(s);
    bad["schema_version"] = 99;
    CHECK_THROWS_AS(summary_from_json(bad), ConfigError);
}

TEST_CASE("zero-budget experiment reports initial metrics") {
    ExperimentConfig cfg = small_config(temp_dir("zero"));
    cfg.N = 0;
    cfg.replications = 1;
    cfg.strategies.resize(1);
    cfg.strategies[0].kind = StrategyKind::random;
    const SummaryReport s = run_experiment(cfg, false);
    REQUIRE(s.runs.size() == 1);
    CHECK(s.runs[0].status == "completed");
    CHECK(s.runs[0].queries == 0);
    CHECK(s.runs[0].add_failures == 0);
    CHECK(s.runs[0].mse > 0.0);
    CHECK(s.runs[0].oracle_calls == cfg.init_size);
}

TEST_CASE("experiment artifacts are deterministic") {
    const std::string d1 = temp_dir("det1");
    const std::string d2 = temp_dir("det2");
    ExperimentConfig c1 = small_config(d1);
    ExperimentConfig c2 = small_config(d2);
    c2.jobs = 2;
    const SummaryReport s1 = run_experiment(c1);
    const SummaryReport s2 = run_experiment(c2);
    CHECK(s1 == s2);
    CHECK(read_text_file(d1 + "/summary.json") == read_text_file(d2 + "/summary.json"));
    for (const RunSummary& r : s1.runs) {
        REQUIRE_FALSE(r.trace_file.empty());
        CHECK(read_text_file(d1 + "/" + r.trace_file) == read_text_file(d2 + "/" + r.trace_file));
        CHECK(r.oracle_calls == c1.init_size + r.queries);
        CHECK(r.queries == c1.N);
    }
    for (const StrategyAggregate& a : s1.aggregates) {
        double sum = 0.0;
        for (const RunSummary& r : s1.runs) {
            if (r.strategy == a.strategy) sum += r.mae;
        }
        CHECK(a.mean_mae == doctest::Approx(sum / a.runs).epsilon(1e-14));
    }
}

TEST_CASE("changing one replication seed changes only that replication") {
    ExperimentConfig base = small_config(temp_dir("iso"));
    const SummaryReport a = run_experiment(base, false);
    ExperimentConfig changed = base;
    changed.replication_seeds[1] = 424242;
    const SummaryReport b = run_experiment(changed, false);
    for (const std::string& name : a.strategies) {
        CHECK(*a.find(name, 0) == *b.find(name, 0));
        CHECK_FALSE(*a.find(name, 1) == *b.find(name, 1));
    }
}

TEST_CASE("pool, initial design and test set are disjoint") {
    const ExperimentConfig cfg = small_config(temp_dir("disjoint"));
    const ExperimentSetup setup = prepare_experiment(cfg);
    CHECK(setup.pool.size() == 100);
    CHECK(setup.test.size() == 30);
    const LabeledData init = initial_design(cfg, setup.problem, 0);
    for (Eigen::Index i = 0; i < init.size(); ++i) {
        for (Eigen::Index j = 0; j < setup.pool.size(); ++j) CHECK_FALSE(init.X.col(i) == setup.pool.points.col(j));
    }

    ExperimentConfig grid = cfg;
    grid.pool_generation = PoolGeneration::grid;
    CHECK(prepare_experiment(grid).pool.size() == 100);
    grid.pool_size = 99;
    CHECK_THROWS_AS(prepare_experiment(grid), ConfigError);
}

TEST_CASE("sweep values") {
    const ExperimentConfig cfg = small_config(temp_dir("sweep"));
    const ExperimentConfig w = apply_sweep_value(cfg, "w", 0.7);
    CHECK(w.strategies[0].acq.w == 0.7);
    CHECK(apply_sweep_value(cfg, "N", 3).N == 3);
    CHECK_THROWS_AS(apply_sweep_value(cfg, "w", 1.5), InvalidInput);
    CHECK_THROWS_AS(apply_sweep_value(cfg, "beta", 1.0), ConfigError);

    ExperimentConfig one = cfg;
    one.replications = 1;
    one.N = 2;
    const SweepReport r = run_sweep(one, "w", {0.0, 1.0}, false);
    REQUIRE(r.rows.size() == 2);
    const std::string md = render_sweep_markdown(r);
    CHECK(std::count(md.begin(), md.end(), '\n') == 2 + 2 * 2);
}
