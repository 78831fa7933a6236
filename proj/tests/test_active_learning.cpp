#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "physcal/active_learning.hpp"
#include "physcal/error.hpp"

using namespace physcal;

namespace {

struct Setup {
    ProblemSpec problem = make_benchmark_2d();
    CandidatePool pool;
    TestSet test;
    LabeledData init;

    explicit Setup(std::uint64_t seed, int pool_size = 120) {
        Rng rng(seed);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        pool.id = seed;
        pool.points.resize(2, pool_size);
        for (int k = 0; k < pool_size; ++k) pool.points.col(k) << u(rng), u(rng);
        test = make_safe_test_set(problem, 30, seed + 1);
        Oracle oracle(problem, seed + 2);
        init = oracle.observe_all(problem.from_unit(maximin_lhd(10, 2, seed + 3, 20)));
    }

    RunContext ctx() const { return {&problem, &pool, &test}; }
};

RunOptions fast() {
    RunOptions o;
    o.fit.starts = 2;
    return o;
}

Strategy strategy(StrategyKind k) {
    Strategy s;
    s.kind = k;
    return s;
}

}  // namespace

TEST_CASE("strategy names and schedules") {
    CHECK(strategy_kind_from_string("alc") == StrategyKind::alc);
    CHECK(std::string(to_string(StrategyKind::safe_alm)) == "safe_alm");
    CHECK_THROWS_AS(strategy_kind_from_string("segp"), ConfigError);
    Strategy s = strategy(StrategyKind::physcal);
    CHECK(s.name() == "physcal");
    s.label = "physcal_w04";
    CHECK(s.name() == "physcal_w04");
    s.w_schedule = {{0, 0.8}, {10, 0.2}};
    CHECK(s.weight_at(0) == 0.8);
    CHECK(s.weight_at(9) == 0.8);
    CHECK(s.weight_at(10) == 0.2);
    CHECK(strategy(StrategyKind::safe_alm).constrained());
    CHECK_FALSE(strategy(StrategyKind::alc).constrained());
}

TEST_CASE("safe test set") {
    const ProblemSpec p = make_benchmark_2d();
    const TestSet t = make_safe_test_set(p, 50, 4);
    REQUIRE(t.size() == 50);
    for (Eigen::Index i = 0; i < t.size(); ++i) {
        CHECK(p.truly_safe(t.X.col(i)));
        CHECK(t.y[i] == p.target(t.X.col(i)));
    }
}

TEST_CASE("zero budget fits the initial models only") {
    const Setup s(1);
    const RunResult r = run_physcal(s.ctx(), s.init, SafetyConfig{}, AcquisitionConfig{}, 0, 5, fast());
    CHECK(r.trace.records.empty());
    CHECK(r.trace.status == RunStatus::completed);
    CHECK(r.trace.oracle_calls == 10);
    CHECK(r.target_model.size() == 10);
    CHECK(r.trace.final_mse() == r.trace.initial_mse);
    CHECK(r.trace.initial_mse > 0.0);
}

TEST_CASE("PhysCAL run bookkeeping and determinism") {
    const Setup s(2);
    const RunResult a = run_physcal(s.ctx(), s.init, SafetyConfig{}, AcquisitionConfig{}, 8, 77, fast());
    const RunResult b = run_physcal(s.ctx(), s.init, SafetyConfig{}, AcquisitionConfig{}, 8, 77, fast());
    REQUIRE(a.trace.records.size() == 8);
    CHECK(trace_to_csv(a.trace) == trace_to_csv(b.trace));
    CHECK(a.trace.oracle_calls == 10 + 8);
    CHECK(a.target_model.size() == 18);

    int safe_queries = 0;
    std::vector<Eigen::Index> seen;
    for (const IterationRecord& r : a.trace.records) {
        if (r.true_safe) ++safe_queries;
        CHECK(r.est_safe);
        CHECK_FALSE(r.fallback);
        CHECK(r.safe_count <= r.safe_plus_count);
        CHECK(std::find(seen.begin(), seen.end(), r.pool_index) == seen.end());
        seen.push_back(r.pool_index);
        CHECK(r.x == s.pool.points.col(r.pool_index));
        CHECK(r.jf >= -1e-10);
        CHECK(r.jh >= 0.0);
    }
    CHECK(a.trace.failures() + safe_queries == 8);

    const std::string csv = trace_to_csv(a.trace);
    CHECK(csv.rfind(trace_csv_header(2), 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 9);
}

TEST_CASE("random baseline follows the seeded pool order") {
    const Setup s(3);
    const RunResult r = run_baseline(s.ctx(), s.init, strategy(StrategyKind::random), 6, 123, fast());
    const std::vector<Eigen::Index> order = random_query_order(s.pool.size(), 123);
    REQUIRE(r.trace.records.size() == 6);
    for (int i = 0; i < 6; ++i) CHECK(r.trace.records[static_cast<std::size_t>(i)].pool_index == order[static_cast<std::size_t>(i)]);
    CHECK(random_query_order(50, 1) == random_query_order(50, 1));
    CHECK(random_query_order(50, 1) != random_query_order(50, 2));
}

TEST_CASE("ALM breaks an exact tie by the lowest pool index") {
    ProblemSpec p = make_convergence_1d();
    CandidatePool pool;
    pool.points.resize(1, 3);
    // duplicated far point gives bitwise-equal variances
    pool.points << 0.5, 0.0, 0.0;
    LabeledData init;
    init.X.resize(1, 4);
    init.X << 0.25, 0.375, 0.625, 0.75;
    init.y = init.X.row(0).transpose().array().square();
    init.z = Eigen::Vector4d::Constant(0.2);
    init.true_safe = {true, true, true, true};
    RunOptions o = fast();
    o.fit.noise = NoiseMode::fixed;
    const RunContext ctx{&p, &pool, nullptr};
    const RunResult r = run_baseline(ctx, init, strategy(StrategyKind::alm), 1, 1, o);
    REQUIRE(r.trace.records.size() == 1);
    CHECK(r.trace.records[0].pool_index == 1);
}

TEST_CASE("baselines query unique pool points") {
    const Setup s(4);
    for (StrategyKind k : {StrategyKind::alm, StrategyKind::alc, StrategyKind::safe_alm}) {
        const RunResult r = run_baseline(s.ctx(), s.init, strategy(k), 5, 9, fast());
        REQUIRE(r.trace.records.size() == 5);
        std::vector<Eigen::Index> idx;
        for (const IterationRecord& rec : r.trace.records) idx.push_back(rec.pool_index);
        std::sort(idx.begin(), idx.end());
        CHECK(std::adjacent_find(idx.begin(), idx.end()) == idx.end());
        if (k == StrategyKind::safe_alm) {
            for (const IterationRecord& rec : r.trace.records) CHECK((rec.est_safe || rec.fallback));
        }
    }
    CHECK_THROWS_AS(run_baseline(s.ctx(), s.init, strategy(StrategyKind::physcal), 1, 1, fast()), InvalidInput);
}

TEST_CASE("empty safe region") {
    Setup s(5);
    // pool in the upper-right corner, only two lower-left observations labeled safe
    ProblemSpec p = s.problem;
    p.xi = 0.05;
    for (Eigen::Index i = 0; i < s.pool.size(); ++i) s.pool.points.col(i) << 0.95, 0.8 + 0.001 * (i % 100);
    LabeledData init = s.init;
    std::vector<Eigen::Index> order(static_cast<std::size_t>(init.size()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        return init.X.col(a).sum() < init.X.col(b).sum();
    });
    init.z.setConstant(1.0);
    init.z[order[0]] = -1.0;
    init.z[order[1]] = -1.0;
    const RunContext ctx{&p, &s.pool, &s.test};
    SafetyConfig safety;
    safety.xi = p.xi;

    RunOptions no_fallback = fast();
    no_fallback.allow_fallback = false;
    const RunResult aborted = run_physcal(ctx, init, safety, AcquisitionConfig{}, 3, 1, no_fallback);
    CHECK(aborted.trace.status == RunStatus::aborted);
    CHECK_FALSE(aborted.trace.message.empty());
    CHECK(aborted.trace.records.empty());
    CHECK(aborted.trace.oracle_calls == init.size());

    const RunResult fb = run_physcal(ctx, init, safety, AcquisitionConfig{}, 3, 1, fast());
    REQUIRE(fb.trace.records.size() == 3);
    CHECK(fb.trace.records[0].fallback);
    CHECK_FALSE(fb.trace.records[0].est_safe);
}

TEST_CASE("run preconditions") {
    const Setup s(6);
    LabeledData unsafe = s.init;
    unsafe.z.setConstant(5.0);
    CHECK_THROWS_AS(run_physcal(s.ctx(), unsafe, SafetyConfig{}, AcquisitionConfig{}, 2, 1, fast()), InvalidInput);
    CHECK_NOTHROW(run_baseline(s.ctx(), unsafe, strategy(StrategyKind::alm), 1, 1, fast()));

    RunOptions acc = fast();
    acc.accuracy = AccuracyStop{AccuracyMetric::mse, 1.0};
    const RunContext no_test{&s.problem, &s.pool, nullptr};
    CHECK_THROWS_AS(run_physcal(no_test, s.init, SafetyConfig{}, AcquisitionConfig{}, 2, 1, acc), ConfigError);
}

TEST_CASE("accuracy stopping") {
    RunTrace t;
    t.initial_mse = 0.01;
    CHECK(should_stop(t, 0, nullptr, false));
    const AccuracyStop inf{};
    CHECK_FALSE(should_stop(t, 5, &inf, true));
    const AccuracyStop tight{AccuracyMetric::mse, 0.0023};
    CHECK_FALSE(should_stop(t, 5, &tight, true));
    t.records.resize(1);
    t.records[0].test_mse = 0.002;
    CHECK(should_stop(t, 5, &tight, true));
    CHECK_THROWS_AS(should_stop(t, 5, &tight, false), ConfigError);

    const Setup s(7);
    RunOptions o = fast();
    o.accuracy = AccuracyStop{AccuracyMetric::mse, 1e9};
    const RunResult r = run_physcal(s.ctx(), s.init, SafetyConfig{}, AcquisitionConfig{}, 5, 1, o);
    CHECK(r.trace.status == RunStatus::stopped_early);
    CHECK(r.trace.records.size() == 1);
}

TEST_CASE("seed derivation") {
    CHECK(derive_seed(1, 0) == derive_seed(1, 0));
    CHECK(derive_seed(1, 0) != derive_seed(1, 1));
    CHECK(derive_seed(1, 0) != derive_seed(2, 0));
}
