#include "physcal/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "physcal/error.hpp"

namespace physcal {

using nlohmann::json;

namespace {

constexpr std::uint64_t kPoolStream = 11;
constexpr std::uint64_t kTestStream = 12;
constexpr std::uint64_t kReplicationStream = 100;
constexpr std::uint64_t kInitDesignStream = 1;
constexpr std::uint64_t kInitOracleStream = 2;
constexpr std::uint64_t kRunStream = 3;

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be an object");
    for (const auto& item : j.items()) {
        if (std::find_if(allowed.begin(), allowed.end(), [&](const char* k) { return item.key() == k; }) ==
            allowed.end()) {
            throw ConfigError("unknown key '" + item.key() + "' in " + where);
        }
    }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
    }
}

void read_safety(const json& j, SafetyConfig& s) {
    check_keys(j, {"gamma", "p_plus", "reallocate_budget"}, "safety");
    read(j, "gamma", s.gamma);
    read(j, "p_plus", s.p_plus);
    read(j, "reallocate_budget", s.reallocate_budget);
}

void read_acquisition(const json& j, AcquisitionConfig& a) {
    check_keys(j, {"w", "power", "alpha", "normalization"}, "acquisition");
    read(j, "w", a.w);
    read(j, "power", a.power);
    read(j, "alpha", a.alpha);
    if (j.contains("normalization")) a.normalization = normalization_from_string(j.at("normalization").get<std::string>());
}

void read_fit(const json& j, FitConfig& f) {
    check_keys(j, {"starts", "noise", "fixed_nugget", "nugget_floor", "center", "tolerance", "max_iterations"}, "fit");
    read(j, "starts", f.starts);
    if (j.contains("noise")) {
        const std::string n = j.at("noise").get<std::string>();
        if (n == "estimated") {
            f.noise = NoiseMode::estimated;
        } else if (n == "fixed") {
            f.noise = NoiseMode::fixed;
        } else {
            throw ConfigError("fit.noise must be 'estimated' or 'fixed'");
        }
    }
    read(j, "fixed_nugget", f.fixed_nugget);
    read(j, "nugget_floor", f.nugget_floor);
    read(j, "center", f.center);
    read(j, "tolerance", f.tolerance);
    read(j, "max_iterations", f.max_iterations);
}

void read_run(const json& j, RunOptions& r) {
    check_keys(j, {"refit_every", "warm_start", "allow_fallback", "accuracy"}, "run");
    read(j, "refit_every", r.refit_every);
    read(j, "warm_start", r.warm_start);
    read(j, "allow_fallback", r.allow_fallback);
    if (j.contains("accuracy")) {
        const json& a = j.at("accuracy");
        check_keys(a, {"metric", "threshold"}, "run.accuracy");
        AccuracyStop stop;
        if (a.contains("metric")) {
            const std::string m = a.at("metric").get<std::string>();
            if (m == "mse") {
                stop.metric = AccuracyMetric::mse;
            } else if (m == "mae") {
                stop.metric = AccuracyMetric::mae;
            } else {
                throw ConfigError("run.accuracy.metric must be 'mse' or 'mae'");
            }
        }
        read(a, "threshold", stop.threshold);
        r.accuracy = stop;
    }
}

json safety_json(const SafetyConfig& s) {
    return {{"gamma", s.gamma}, {"p_plus", s.p_plus}, {"reallocate_budget", s.reallocate_budget}};
}

json acquisition_json(const AcquisitionConfig& a) {
    return {{"w", a.w}, {"power", a.power}, {"alpha", a.alpha}, {"normalization", to_string(a.normalization)}};
}

ModelSnapshot snapshot_model(const GPModel& m) {
    ModelSnapshot s;
    const KernelParams& p = m.params();
    s.lengthscales.assign(p.lengthscales.data(), p.lengthscales.data() + p.lengthscales.size());
    s.signal_variance = p.signal_variance();
    s.nugget = p.nugget;
    s.mean_offset = m.mean_offset();
    return s;
}

bool same_column(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
    for (Eigen::Index i = 0; i < A.cols(); ++i) {
        for (Eigen::Index j = 0; j < B.cols(); ++j) {
            if (A.col(i) == B.col(j)) return true;
        }
    }
    return false;
}

Eigen::MatrixXd grid_points(const ProblemSpec& problem, int size) {
    const int D = problem.dim;
    const int side = static_cast<int>(std::lround(std::pow(size, 1.0 / D)));
    long total = 1;
    for (int d = 0; d < D; ++d) total *= side;
    if (total != size) throw ConfigError("grid pool size must be a perfect power of the dimension");
    Eigen::MatrixXd unit(D, size);
    for (int k = 0; k < size; ++k) {
        int rest = k;
        for (int d = 0; d < D; ++d) {
            unit(d, k) = (rest % side + 0.5) / side;
            rest /= side;
        }
    }
    return problem.from_unit(unit);
}

}  // namespace

// ---------------------------------------------------------------------------
// Config

void ExperimentConfig::validate() const {
    if (replications < 1) throw ConfigError("replications must be at least 1");
    if (N < 0) throw ConfigError("N must be nonnegative");
    if (pool_size < 1) throw ConfigError("pool size must be positive");
    if (init_size < 2) throw ConfigError("initial design needs at least two points");
    if (test_size < 0) throw ConfigError("test size must be nonnegative");
    if (lhd_restarts < 1) throw ConfigError("lhd_restarts must be positive");
    if (jobs < 0) throw ConfigError("jobs must be nonnegative");
    if (strategies.empty()) throw ConfigError("at least one strategy is required");
    std::set<std::string> names;
    for (const Strategy& s : strategies) {
        if (!names.insert(s.name()).second) throw ConfigError("duplicate strategy name '" + s.name() + "'");
        if (s.kind == StrategyKind::physcal) s.acq.validate();
        for (const auto& [from, value] : s.w_schedule) {
            if (from < 0 || value < 0.0 || value > 1.0) throw ConfigError("invalid weight schedule entry");
        }
    }
    for (const auto& [rep, seed] : replication_seeds) {
        if (rep < 0 || rep >= replications) throw ConfigError("replication seed override out of range");
    }
}

std::uint64_t ExperimentConfig::replication_seed(int replication) const {
    const auto it = replication_seeds.find(replication);
    if (it != replication_seeds.end()) return it->second;
    return derive_seed(seed, kReplicationStream + static_cast<std::uint64_t>(replication));
}

ExperimentConfig config_from_json(const json& j) {
    check_keys(j, {"problem", "pool", "init", "test", "strategies", "N", "replications", "seed",
                   "replication_seeds", "safety", "acquisition", "fit", "run", "jobs", "output_dir",
                   "write_traces"},
               "config");
    ExperimentConfig cfg;
    if (j.contains("problem")) {
        const json& p = j.at("problem");
        if (p.is_string()) {
            cfg.problem = p.get<std::string>();
        } else {
            check_keys(p, {"name", "xi", "noise_f", "noise_h"}, "problem");
            read(p, "name", cfg.problem);
            if (p.contains("xi")) cfg.xi = p.at("xi").get<double>();
            if (p.contains("noise_f")) cfg.noise_f = p.at("noise_f").get<double>();
            if (p.contains("noise_h")) cfg.noise_h = p.at("noise_h").get<double>();
        }
    }
    if (j.contains("pool")) {
        const json& p = j.at("pool");
        check_keys(p, {"size", "generation"}, "pool");
        read(p, "size", cfg.pool_size);
        if (p.contains("generation")) {
            const std::string g = p.at("generation").get<std::string>();
            if (g == "uniform") {
                cfg.pool_generation = PoolGeneration::uniform;
            } else if (g == "grid") {
                cfg.pool_generation = PoolGeneration::grid;
            } else {
                throw ConfigError("pool.generation must be 'uniform' or 'grid'");
            }
        }
    }
    if (j.contains("init")) {
        check_keys(j.at("init"), {"size", "lhd_restarts"}, "init");
        read(j.at("init"), "size", cfg.init_size);
        read(j.at("init"), "lhd_restarts", cfg.lhd_restarts);
    }
    if (j.contains("test")) {
        check_keys(j.at("test"), {"size"}, "test");
        read(j.at("test"), "size", cfg.test_size);
    }
    read(j, "N", cfg.N);
    read(j, "replications", cfg.replications);
    read(j, "seed", cfg.seed);
    if (j.contains("replication_seeds")) {
        for (const auto& item : j.at("replication_seeds").items()) {
            int rep = 0;
            try {
                rep = std::stoi(item.key());
            } catch (const std::exception&) {
                throw ConfigError("replication_seeds keys must be replication indices");
            }
            cfg.replication_seeds[rep] = item.value().get<std::uint64_t>();
        }
    }

    SafetyConfig safety;
    AcquisitionConfig acq;
    if (j.contains("safety")) read_safety(j.at("safety"), safety);
    if (j.contains("acquisition")) read_acquisition(j.at("acquisition"), acq);
    if (j.contains("fit")) read_fit(j.at("fit"), cfg.run.fit);
    if (j.contains("run")) read_run(j.at("run"), cfg.run);
    read(j, "jobs", cfg.jobs);
    read(j, "output_dir", cfg.output_dir);
    read(j, "write_traces", cfg.write_traces);

    const json strategies = j.contains("strategies")
                                ? j.at("strategies")
                                : json::array({"physcal", "alc", "alm", "random", "safe_alm"});
    if (!strategies.is_array()) throw ConfigError("strategies must be an array");
    for (const json& s : strategies) {
        Strategy st;
        st.safety = safety;
        st.acq = acq;
        if (s.is_string()) {
            st.kind = strategy_kind_from_string(s.get<std::string>());
        } else {
            check_keys(s, {"kind", "label", "safety", "acquisition", "w_schedule"}, "strategy");
            if (!s.contains("kind")) throw ConfigError("strategy entries need a 'kind'");
            st.kind = strategy_kind_from_string(s.at("kind").get<std::string>());
            read(s, "label", st.label);
            if (s.contains("safety")) read_safety(s.at("safety"), st.safety);
            if (s.contains("acquisition")) read_acquisition(s.at("acquisition"), st.acq);
            if (s.contains("w_schedule")) {
                for (const json& e : s.at("w_schedule")) {
                    if (!e.is_array() || e.size() != 2) throw ConfigError("w_schedule entries are [query, w] pairs");
                    st.w_schedule.emplace_back(e[0].get<int>(), e[1].get<double>());
                }
            }
        }
        cfg.strategies.push_back(std::move(st));
    }
    cfg.validate();
    return cfg;
}

json config_to_json(const ExperimentConfig& cfg) {
    json problem = {{"name", cfg.problem}};
    if (cfg.xi) problem["xi"] = *cfg.xi;
    if (cfg.noise_f) problem["noise_f"] = *cfg.noise_f;
    if (cfg.noise_h) problem["noise_h"] = *cfg.noise_h;
    json strategies = json::array();
    for (const Strategy& s : cfg.strategies) {
        json e = {{"kind", to_string(s.kind)},
                  {"safety", safety_json(s.safety)},
                  {"acquisition", acquisition_json(s.acq)}};
        if (!s.label.empty()) e["label"] = s.label;
        if (!s.w_schedule.empty()) {
            json sched = json::array();
            for (const auto& [from, value] : s.w_schedule) sched.push_back({from, value});
            e["w_schedule"] = sched;
        }
        strategies.push_back(e);
    }
    json seeds = json::object();
    for (const auto& [rep, seed] : cfg.replication_seeds) seeds[std::to_string(rep)] = seed;
    const FitConfig& f = cfg.run.fit;
    json run = {{"refit_every", cfg.run.refit_every},
                {"warm_start", cfg.run.warm_start},
                {"allow_fallback", cfg.run.allow_fallback}};
    if (cfg.run.accuracy) {
        run["accuracy"] = {{"metric", cfg.run.accuracy->metric == AccuracyMetric::mse ? "mse" : "mae"},
                           {"threshold", cfg.run.accuracy->threshold}};
    }
    return {{"problem", problem},
            {"pool", {{"size", cfg.pool_size}, {"generation", cfg.pool_generation == PoolGeneration::grid ? "grid" : "uniform"}}},
            {"init", {{"size", cfg.init_size}, {"lhd_restarts", cfg.lhd_restarts}}},
            {"test", {{"size", cfg.test_size}}},
            {"strategies", strategies},
            {"N", cfg.N},
            {"replications", cfg.replications},
            {"seed", cfg.seed},
            {"replication_seeds", seeds},
            {"fit",
             {{"starts", f.starts},
              {"noise", f.noise == NoiseMode::estimated ? "estimated" : "fixed"},
              {"fixed_nugget", f.fixed_nugget},
              {"nugget_floor", f.nugget_floor},
              {"center", f.center},
              {"tolerance", f.tolerance},
              {"max_iterations", f.max_iterations}}},
            {"run", run},
            {"jobs", cfg.jobs},
            {"output_dir", cfg.output_dir},
            {"write_traces", cfg.write_traces}};
}

ExperimentConfig load_config(const std::string& path) {
    json j;
    try {
        j = json::parse(read_text_file(path));
    } catch (const json::parse_error& e) {
        throw ConfigError("cannot parse " + path + ": " + e.what());
    }
    ExperimentConfig cfg = config_from_json(j);
    if (const char* dir = std::getenv("PHYSCAL_OUTPUT_DIR"); dir && *dir) cfg.output_dir = dir;
    if (const char* jobs = std::getenv("PHYSCAL_JOBS"); jobs && *jobs) {
        try {
            cfg.jobs = std::stoi(jobs);
        } catch (const std::exception&) {
            throw ConfigError("PHYSCAL_JOBS must be an integer");
        }
        if (cfg.jobs < 0) throw ConfigError("PHYSCAL_JOBS must be nonnegative");
    }
    return cfg;
}

// ---------------------------------------------------------------------------
// Runs

Metrics compute_metrics(const RunTrace& trace, const GPModel& target_model, const TestSet& test) {
    Metrics m;
    if (test.size() > 0) {
        const BatchPrediction p = target_model.predict(test.X);
        const Eigen::ArrayXd err = p.mean.array() - test.y.array();
        m.mse = err.square().mean();
        m.mae = err.abs().mean();
    }
    m.add_failures = static_cast<int>(
        std::count_if(trace.records.begin(), trace.records.end(), [](const IterationRecord& r) { return !r.true_safe; }));
    return m;
}

const RunSummary* SummaryReport::find(const std::string& strategy, int replication) const {
    for (const RunSummary& r : runs) {
        if (r.strategy == strategy && r.replication == replication) return &r;
    }
    return nullptr;
}

const StrategyAggregate* SummaryReport::aggregate(const std::string& strategy) const {
    for (const StrategyAggregate& a : aggregates) {
        if (a.strategy == strategy) return &a;
    }
    return nullptr;
}

std::vector<StrategyAggregate> aggregate_runs(const std::vector<RunSummary>& runs,
                                              const std::vector<std::string>& strategies) {
    std::vector<StrategyAggregate> out;
    for (const std::string& name : strategies) {
        StrategyAggregate a;
        a.strategy = name;
        std::vector<double> mae, mse, fail;
        for (const RunSummary& r : runs) {
            if (r.strategy != name) continue;
            if (r.status == "error") {
                ++a.aborted_runs;
                continue;
            }
            if (r.status == "aborted") ++a.aborted_runs;
            mae.push_back(r.mae);
            mse.push_back(r.mse);
            fail.push_back(r.add_failures);
            if (r.add_failures == 0) ++a.zero_failure_runs;
        }
        a.runs = static_cast<int>(mae.size());
        const auto stats = [](const std::vector<double>& v, double& mean, double& sd) {
            mean = 0.0;
            sd = 0.0;
            if (v.empty()) return;
            for (double x : v) mean += x;
            mean /= static_cast<double>(v.size());
            if (v.size() < 2) return;
            for (double x : v) sd += (x - mean) * (x - mean);
            sd = std::sqrt(sd / static_cast<double>(v.size() - 1));
        };
        stats(mae, a.mean_mae, a.std_mae);
        stats(mse, a.mean_mse, a.std_mse);
        stats(fail, a.mean_failures, a.std_failures);
        out.push_back(a);
    }
    return out;
}

ExperimentSetup prepare_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    ExperimentSetup setup;
    setup.problem = make_problem(cfg.problem);
    if (cfg.xi) setup.problem.xi = *cfg.xi;
    if (cfg.noise_f) setup.problem.noise_f = *cfg.noise_f;
    if (cfg.noise_h) setup.problem.noise_h = *cfg.noise_h;
    if (setup.problem.noise_f < 0.0 || setup.problem.noise_h < 0.0) throw ConfigError("noise must be nonnegative");

    const std::uint64_t pool_seed = derive_seed(cfg.seed, kPoolStream);
    setup.pool.id = pool_seed;
    if (cfg.pool_generation == PoolGeneration::grid) {
        setup.pool.points = grid_points(setup.problem, cfg.pool_size);
    } else {
        Rng rng(pool_seed);
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        Eigen::MatrixXd unit(setup.problem.dim, cfg.pool_size);
        for (Eigen::Index k = 0; k < unit.cols(); ++k) {
            for (Eigen::Index d = 0; d < unit.rows(); ++d) unit(d, k) = u01(rng);
        }
        setup.pool.points = setup.problem.from_unit(unit);
    }
    if (cfg.test_size > 0) {
        setup.test = make_safe_test_set(setup.problem, cfg.test_size, derive_seed(cfg.seed, kTestStream));
        if (same_column(setup.test.X, setup.pool.points)) throw ConfigError("test set overlaps the candidate pool");
    } else {
        setup.test.X.resize(setup.problem.dim, 0);
        setup.test.y.resize(0);
    }
    return setup;
}

LabeledData initial_design(const ExperimentConfig& cfg, const ProblemSpec& problem, int replication) {
    const std::uint64_t rep_seed = cfg.replication_seed(replication);
    const Eigen::MatrixXd unit =
        maximin_lhd(cfg.init_size, problem.dim, derive_seed(rep_seed, kInitDesignStream), cfg.lhd_restarts);
    Oracle oracle(problem, derive_seed(rep_seed, kInitOracleStream));
    return oracle.observe_all(problem.from_unit(unit));
}

namespace {

std::string trace_file_name(const std::string& strategy, int replication) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "_rep%03d.csv", replication);
    return "traces/" + strategy + buf;
}

std::vector<RunSummary> run_replication(const ExperimentConfig& cfg, const ExperimentSetup& setup, int rep,
                                        bool write_files) {
    std::vector<RunSummary> out;
    const std::uint64_t rep_seed = cfg.replication_seed(rep);
    LabeledData init;
    std::string init_error;
    try {
        init = initial_design(cfg, setup.problem, rep);
        if (same_column(init.X, setup.pool.points) || same_column(init.X, setup.test.X)) {
            throw ConfigError("initial design overlaps the pool or the test set");
        }
    } catch (const std::exception& e) {
        init_error = e.what();
    }
    RunContext ctx{&setup.problem, &setup.pool, setup.test.size() > 0 ? &setup.test : nullptr};
    RunOptions options = cfg.run;
    options.on_scores = nullptr;
    for (const Strategy& base : cfg.strategies) {
        Strategy strategy = base;
        strategy.safety.xi = setup.problem.xi;
        strategy.safety.budget = std::max(cfg.N, 1);
        RunSummary s;
        s.strategy = strategy.name();
        s.replication = rep;
        s.seed = rep_seed;
        try {
            if (!init_error.empty()) throw ConfigError(init_error);
            RunResult r = run_strategy(ctx, init, strategy, cfg.N, derive_seed(rep_seed, kRunStream), options);
            const Metrics m = compute_metrics(r.trace, r.target_model, setup.test);
            s.status = to_string(r.trace.status);
            s.message = r.trace.message;
            s.mae = m.mae;
            s.mse = m.mse;
            s.add_failures = m.add_failures;
            s.queries = static_cast<int>(r.trace.records.size());
            s.fallbacks = r.trace.fallbacks();
            s.init_failures = r.trace.init_failures;
            s.oracle_calls = r.trace.oracle_calls;
            s.target_model = snapshot_model(r.target_model);
            s.constraint_model = snapshot_model(r.constraint_model);
            if (write_files && cfg.write_traces) {
                s.trace_file = trace_file_name(s.strategy, rep);
                write_text_file((std::filesystem::path(cfg.output_dir) / s.trace_file).string(), trace_to_csv(r.trace));
            }
        } catch (const std::exception& e) {
            s.status = "error";
            s.message = e.what();
        }
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace

SummaryReport run_experiment(const ExperimentConfig& cfg, bool write_files) {
    const ExperimentSetup setup = prepare_experiment(cfg);
    if (write_files) std::filesystem::create_directories(std::filesystem::path(cfg.output_dir) / "traces");

    std::vector<std::vector<RunSummary>> per_rep(static_cast<std::size_t>(cfg.replications));
    int jobs = cfg.jobs > 0 ? cfg.jobs : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    jobs = std::min(jobs, cfg.replications);
    std::atomic<int> next{0};
    const auto worker = [&] {
        for (int rep = next++; rep < cfg.replications; rep = next++) {
            per_rep[static_cast<std::size_t>(rep)] = run_replication(cfg, setup, rep, write_files);
        }
    };
    if (jobs <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
    }

    SummaryReport report;
    report.problem = setup.problem.name;
    report.N = cfg.N;
    report.replications = cfg.replications;
    report.seed = cfg.seed;
    for (const Strategy& s : cfg.strategies) report.strategies.push_back(s.name());
    for (auto& runs : per_rep) {
        for (RunSummary& r : runs) report.runs.push_back(std::move(r));
    }
    report.aggregates = aggregate_runs(report.runs, report.strategies);
    if (write_files) {
        write_text_file((std::filesystem::path(cfg.output_dir) / "summary.json").string(), render_json(report));
    }
    return report;
}

// ---------------------------------------------------------------------------
// Sweeps

ExperimentConfig apply_sweep_value(ExperimentConfig cfg, const std::string& param, double value) {
    if (param == "N") {
        if (value < 0 || value != std::floor(value)) throw ConfigError("N values must be nonnegative integers");
        cfg.N = static_cast<int>(value);
        return cfg;
    }
    bool touched = false;
    for (Strategy& s : cfg.strategies) {
        if (s.kind != StrategyKind::physcal) continue;
        touched = true;
        if (param == "w") {
            s.acq.w = value;
            s.w_schedule.clear();
        } else if (param == "alpha") {
            s.acq.alpha = value;
        } else if (param == "power") {
            if (value != std::floor(value)) throw ConfigError("power values must be integers");
            s.acq.power = static_cast<int>(value);
        } else if (param == "p_plus") {
            s.safety.p_plus = value;
        } else if (param == "gamma") {
            s.safety.gamma = value;
        } else {
            throw ConfigError("unsupported sweep parameter '" + param + "'");
        }
    }
    if (!touched) throw ConfigError("sweep over '" + param + "' needs a physcal strategy");
    cfg.validate();
    return cfg;
}

SweepReport run_sweep(const ExperimentConfig& cfg, const std::string& param, const std::vector<double>& values,
                      bool write_files) {
    if (values.empty()) throw ConfigError("sweep needs at least one value");
    SweepReport report;
    report.param = param;
    for (double v : values) {
        ExperimentConfig c = apply_sweep_value(cfg, param, v);
        std::ostringstream dir;
        dir << param << '_' << v;
        c.output_dir = (std::filesystem::path(cfg.output_dir) / dir.str()).string();
        report.rows.push_back({v, run_experiment(c, write_files)});
    }
    if (write_files) {
        std::filesystem::create_directories(cfg.output_dir);
        const std::filesystem::path base(cfg.output_dir);
        write_text_file((base / "sweep.json").string(), sweep_to_json(report).dump(2) + "\n");
        write_text_file((base / "sweep.md").string(), render_sweep_markdown(report));
    }
    return report;
}

// ---------------------------------------------------------------------------
// Files

void write_text_file(const std::string& path, const std::string& text) {
    const std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path);
    out << text;
    if (!out) throw ConfigError("failed writing " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace physcal
