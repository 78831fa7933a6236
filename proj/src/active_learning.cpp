#include "physcal/active_learning.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "physcal/error.hpp"

namespace physcal {

// ---------------------------------------------------------------------------
// Trace helpers

const char* to_string(RunStatus status) {
    switch (status) {
        case RunStatus::completed: return "completed";
        case RunStatus::stopped_early: return "stopped_early";
        case RunStatus::aborted: return "aborted";
    }
    return "unknown";
}

int RunTrace::fallbacks() const {
    return static_cast<int>(std::count_if(records.begin(), records.end(), [](const IterationRecord& r) { return r.fallback; }));
}

std::string trace_csv_header(Eigen::Index dim) {
    std::ostringstream os;
    os << "iteration,pool_index";
    for (Eigen::Index d = 0; d < dim; ++d) os << ",x" << d;
    os << ",y,z,true_safe,est_safe,fallback,jf,jh,j,j_raw_max,safe_count,safe_plus_count,"
          "max_var_f,max_var_h,region_mismatch,test_mse,test_mae,cumulative_failures";
    return os.str();
}

std::string trace_to_csv(const RunTrace& trace) {
    std::ostringstream os;
    os << std::setprecision(17);
    const Eigen::Index dim = trace.records.empty() ? 0 : trace.records.front().x.size();
    os << trace_csv_header(dim) << '\n';
    for (const IterationRecord& r : trace.records) {
        os << r.index << ',' << r.pool_index;
        for (Eigen::Index d = 0; d < r.x.size(); ++d) os << ',' << r.x[d];
        os << ',' << r.y << ',' << r.z << ',' << r.true_safe << ',' << r.est_safe << ',' << r.fallback << ','
           << r.jf << ',' << r.jh << ',' << r.j << ',' << r.j_raw_max << ',' << r.safe_count << ','
           << r.safe_plus_count << ',' << r.max_var_f << ',' << r.max_var_h << ',' << r.region_mismatch << ','
           << r.test_mse << ',' << r.test_mae << ',' << r.cumulative_failures << '\n';
    }
    return os.str();
}

// ---------------------------------------------------------------------------

const char* to_string(StrategyKind kind) {
    switch (kind) {
        case StrategyKind::physcal: return "physcal";
        case StrategyKind::random: return "random";
        case StrategyKind::alm: return "alm";
        case StrategyKind::alc: return "alc";
        case StrategyKind::safe_alm: return "safe_alm";
    }
    return "unknown";
}

StrategyKind strategy_kind_from_string(const std::string& s) {
    if (s == "physcal") return StrategyKind::physcal;
    if (s == "random") return StrategyKind::random;
    if (s == "alm") return StrategyKind::alm;
    if (s == "alc") return StrategyKind::alc;
    if (s == "safe_alm") return StrategyKind::safe_alm;
    throw ConfigError("unknown strategy '" + s + "'");
}

double Strategy::weight_at(int query) const {
    double w = acq.w;
    for (const auto& [from, value] : w_schedule) {
        if (query >= from) w = value;
    }
    return w;
}

void Strategy::validate() const {
    if (kind == StrategyKind::physcal) acq.validate();
    if (constrained()) safety.validate();
    for (const auto& [from, value] : w_schedule) {
        require(from >= 0, "weight schedule entries must start at a nonnegative query");
        require(value >= 0.0 && value <= 1.0, "scheduled weights must lie in [0, 1]");
    }
}

int LabeledData::safe_labeled(double xi) const {
    return static_cast<int>((z.array() < xi).count());
}

LabeledData Oracle::observe_all(const Eigen::MatrixXd& X) {
    LabeledData d;
    d.X = X;
    d.y.resize(X.cols());
    d.z.resize(X.cols());
    d.true_safe.resize(static_cast<std::size_t>(X.cols()));
    for (Eigen::Index i = 0; i < X.cols(); ++i) {
        const Observation o = observe(X.col(i));
        d.y[i] = o.y;
        d.z[i] = o.z;
        d.true_safe[static_cast<std::size_t>(i)] = o.true_safe;
    }
    return d;
}

TestSet make_safe_test_set(const ProblemSpec& problem, int count, std::uint64_t seed) {
    require(count >= 1, "test set needs at least one point");
    Rng rng(seed);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    TestSet t;
    t.X.resize(problem.dim, count);
    t.y.resize(count);
    int filled = 0;
    long attempts = 0;
    DesignPoint x(problem.dim);
    while (filled < count) {
        if (++attempts > 1000L * count) throw ConfigError("could not draw enough safe test points");
        for (int d = 0; d < problem.dim; ++d) x[d] = problem.lower[d] + u01(rng) * (problem.upper[d] - problem.lower[d]);
        if (!problem.truly_safe(x)) continue;
        t.X.col(filled) = x;
        t.y[filled] = problem.target(x);
        ++filled;
    }
    return t;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::vector<Eigen::Index> random_query_order(Eigen::Index pool_size, std::uint64_t seed) {
    std::vector<Eigen::Index> order(static_cast<std::size_t>(pool_size));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    Rng rng(derive_seed(seed, 2));
    std::shuffle(order.begin(), order.end(), rng);
    return order;
}

bool should_stop(const RunTrace& trace, int budget_left, const AccuracyStop* accuracy, bool have_test_set) {
    if (accuracy && !have_test_set) throw ConfigError("accuracy stopping needs a test set");
    if (budget_left <= 0) return true;
    if (!accuracy || !std::isfinite(accuracy->threshold)) return false;
    const double metric = accuracy->metric == AccuracyMetric::mse ? trace.final_mse() : trace.final_mae();
    return metric <= accuracy->threshold;
}

// ---------------------------------------------------------------------------
// Loop

namespace {

constexpr std::uint64_t kOracleStream = 1;
constexpr std::uint64_t kFitStream = 1000;

struct Models {
    GPModel f;
    GPModel h;
};

Models fit_models(const LabeledData& data, const RunOptions& opt, std::uint64_t seed, int step,
                  const Models* previous, bool refit) {
    if (previous && !refit) {
        const Eigen::Index last = data.size() - 1;
        Models m{previous->f.with_observation(data.X.col(last), data.y[last]),
                 previous->h.with_observation(data.X.col(last), data.z[last])};
        return m;
    }
    FitConfig fc = opt.fit;
    fc.seed = derive_seed(seed, kFitStream + 2 * static_cast<std::uint64_t>(step));
    if (previous && opt.warm_start) fc.warm_start = previous->f.params();
    GPModel f = fit_gp(data.X, data.y, fc);
    fc.seed = derive_seed(seed, kFitStream + 2 * static_cast<std::uint64_t>(step) + 1);
    fc.warm_start.reset();
    if (previous && opt.warm_start) fc.warm_start = previous->h.params();
    GPModel h = fit_gp(data.X, data.z, fc);
    return {std::move(f), std::move(h)};
}

struct Snapshot {
    double mse = 0.0;
    double mae = 0.0;
    double max_var_f = 0.0;
    double max_var_h = 0.0;
    int mismatch = 0;
};

Snapshot snapshot(const Models& m, const RunContext& ctx, const std::vector<bool>& truth, double xi,
                  double beta) {
    Snapshot s;
    if (ctx.test && ctx.test->size() > 0) {
        const BatchPrediction p = m.f.predict(ctx.test->X);
        const Eigen::ArrayXd err = p.mean.array() - ctx.test->y.array();
        s.mse = err.square().mean();
        s.mae = err.abs().mean();
    }
    const BatchPrediction pf = m.f.predict(ctx.pool->points);
    const BatchPrediction ph = m.h.predict(ctx.pool->points);
    s.max_var_f = pf.variance.maxCoeff();
    s.max_var_h = ph.variance.maxCoeff();
    for (Eigen::Index i = 0; i < ctx.pool->size(); ++i) {
        const bool est = is_safe(ph.mean[i], ph.variance[i], beta, xi);
        if (est != truth[static_cast<std::size_t>(i)]) ++s.mismatch;
    }
    return s;
}

template <typename Score>
Eigen::Index argmax_over(const std::vector<bool>& allowed, Score score) {
    Eigen::Index best = -1;
    double best_v = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < allowed.size(); ++i) {
        if (!allowed[i]) continue;
        const double v = score(static_cast<Eigen::Index>(i));
        if (best < 0 || v > best_v) {
            best = static_cast<Eigen::Index>(i);
            best_v = v;
        }
    }
    return best;
}

}  // namespace

RunResult run_strategy(const RunContext& ctx, const LabeledData& init, const Strategy& strategy, int N,
                       std::uint64_t seed, const RunOptions& options) {
    require(ctx.problem && ctx.pool, "run needs a problem and a candidate pool");
    require(N >= 0, "budget N must be nonnegative");
    require(ctx.pool->size() > 0, "candidate pool is empty");
    require(init.size() >= 2, "initial data needs at least two points");
    require(options.refit_every >= 1, "refit_every must be at least 1");
    strategy.validate();
    if (options.accuracy && !(ctx.test && ctx.test->size() > 0)) {
        throw ConfigError("accuracy stopping needs a test set");
    }
    const ProblemSpec& problem = *ctx.problem;
    const CandidatePool& pool = *ctx.pool;
    const SafetyConfig& safety = strategy.safety;
    if (strategy.constrained() && init.safe_labeled(safety.xi) < 2) {
        throw InvalidInput("initial data needs at least two observations labeled safe");
    }

    RunResult result;
    RunTrace& trace = result.trace;
    trace.strategy = strategy.name();
    trace.seed = seed;
    trace.init_size = static_cast<int>(init.size());
    trace.init_failures = static_cast<int>(std::count(init.true_safe.begin(), init.true_safe.end(), false));

    std::vector<bool> truth(static_cast<std::size_t>(pool.size()));
    for (Eigen::Index i = 0; i < pool.size(); ++i) truth[static_cast<std::size_t>(i)] = problem.truly_safe(pool.points.col(i));

    Oracle oracle(problem, derive_seed(seed, kOracleStream));
    LabeledData data = init;
    Models models = fit_models(data, options, seed, 0, nullptr, true);

    const double beta_plus = safety.beta_plus();
    Snapshot snap = snapshot(models, ctx, truth, safety.xi, safety.beta_at(N));
    trace.initial_mse = snap.mse;
    trace.initial_mae = snap.mae;
    trace.initial_region_mismatch = snap.mismatch;

    std::vector<bool> available(static_cast<std::size_t>(pool.size()), true);
    const std::vector<Eigen::Index> random_order =
        strategy.kind == StrategyKind::random ? random_query_order(pool.size(), seed) : std::vector<Eigen::Index>{};
    std::size_t random_cursor = 0;
    const bool have_test = ctx.test && ctx.test->size() > 0;
    int failures = 0;

    for (int q = 0; q < N; ++q) {
        const AccuracyStop* acc = options.accuracy ? &*options.accuracy : nullptr;
        if (q > 0 && should_stop(trace, N - q, acc, have_test)) {
            trace.status = RunStatus::stopped_early;
            break;
        }
        if (std::none_of(available.begin(), available.end(), [](bool b) { return b; })) {
            trace.status = RunStatus::aborted;
            trace.message = "candidate pool exhausted";
            break;
        }

        IterationRecord rec;
        rec.index = q;
        const double beta = safety.beta_at(N - q);
        const SafeMask mask = safe_mask(models.h, pool, safety.xi, beta, std::min(beta_plus, beta));
        std::vector<bool> candidates(available.size());
        for (std::size_t i = 0; i < available.size(); ++i) candidates[i] = available[i] && mask.in_s[i];
        const bool any_safe = std::any_of(candidates.begin(), candidates.end(), [](bool b) { return b; });
        rec.safe_count = static_cast<int>(mask.count_s());
        rec.safe_plus_count = static_cast<int>(mask.count_s_plus());

        Eigen::Index chosen = -1;
        if (strategy.constrained() && !any_safe) {
            if (!options.allow_fallback) {
                trace.status = RunStatus::aborted;
                trace.message = "estimated safe region is empty at query " + std::to_string(q);
                break;
            }
            // Most-probably-safe available point.
            const BatchPrediction ph = models.h.predict(pool.points);
            chosen = argmax_over(available, [&](Eigen::Index i) {
                return -(ph.mean[i] + beta * std::sqrt(ph.variance[i]));
            });
            rec.fallback = true;
        } else {
            switch (strategy.kind) {
                case StrategyKind::physcal: {
                    AcquisitionConfig acq = strategy.acq;
                    acq.w = strategy.weight_at(q);
                    Selection sel = select_next(models.f, models.h, pool, mask, safety, acq, &available);
                    chosen = sel.pool_index;
                    const auto k = static_cast<std::size_t>(chosen);
                    rec.jf = sel.scores.jf_raw[k];
                    rec.jh = sel.scores.jh_raw[k];
                    rec.j = sel.scores.j_integrated[k];
                    rec.j_raw_max = sel.scores.j_raw_max;
                    if (options.on_scores) options.on_scores(q, mask, sel.scores);
                    break;
                }
                case StrategyKind::safe_alm:
                case StrategyKind::alm: {
                    const BatchPrediction pf = models.f.predict(pool.points);
                    const std::vector<bool>& allowed = strategy.kind == StrategyKind::alm ? available : candidates;
                    chosen = argmax_over(allowed, [&](Eigen::Index i) { return pf.variance[i]; });
                    rec.jf = pf.variance[chosen];
                    break;
                }
                case StrategyKind::alc: {
                    std::vector<bool> everywhere(available.size(), true);
                    const IntegrationNodes nodes = integration_nodes(pool, everywhere);
                    const VarianceReduction vr(models.f, nodes);
                    chosen = argmax_over(available, [&](Eigen::Index i) { return vr.reduction(pool.points.col(i)); });
                    rec.jf = vr.reduction(pool.points.col(chosen));
                    break;
                }
                case StrategyKind::random: {
                    while (!available[static_cast<std::size_t>(random_order[random_cursor])]) ++random_cursor;
                    chosen = random_order[random_cursor++];
                    break;
                }
            }
        }

        const DesignPoint x = pool.points.col(chosen);
        rec.pool_index = chosen;
        rec.x = x;
        rec.est_safe = mask.in_s[static_cast<std::size_t>(chosen)];
        available[static_cast<std::size_t>(chosen)] = false;

        const Observation obs = oracle.observe(x);
        rec.y = obs.y;
        rec.z = obs.z;
        rec.true_safe = obs.true_safe;
        if (!obs.true_safe) ++failures;
        rec.cumulative_failures = failures;

        const Eigen::Index n = data.size();
        data.X.conservativeResize(Eigen::NoChange, n + 1);
        data.X.col(n) = x;
        data.y.conservativeResize(n + 1);
        data.y[n] = obs.y;
        data.z.conservativeResize(n + 1);
        data.z[n] = obs.z;
        data.true_safe.push_back(obs.true_safe);

        const bool refit = (q + 1) % options.refit_every == 0;
        models = fit_models(data, options, seed, q + 1, &models, refit);

        snap = snapshot(models, ctx, truth, safety.xi, safety.beta_at(N - q - 1));
        rec.test_mse = snap.mse;
        rec.test_mae = snap.mae;
        rec.max_var_f = snap.max_var_f;
        rec.max_var_h = snap.max_var_h;
        rec.region_mismatch = snap.mismatch;
        rec.signal_var_f = models.f.params().signal_variance();
        rec.signal_var_h = models.h.params().signal_variance();
        trace.records.push_back(std::move(rec));
    }

    trace.oracle_calls = static_cast<int>(init.size()) + oracle.calls();
    result.target_model = std::move(models.f);
    result.constraint_model = std::move(models.h);
    return result;
}

RunResult run_physcal(const RunContext& ctx, const LabeledData& init, const SafetyConfig& safety,
                      const AcquisitionConfig& acq, int N, std::uint64_t seed, const RunOptions& options) {
    Strategy s;
    s.kind = StrategyKind::physcal;
    s.safety = safety;
    s.acq = acq;
    return run_strategy(ctx, init, s, N, seed, options);
}

RunResult run_baseline(const RunContext& ctx, const LabeledData& init, const Strategy& strategy, int N,
                       std::uint64_t seed, const RunOptions& options) {
    require(strategy.kind != StrategyKind::physcal, "run_baseline expects a baseline strategy");
    return run_strategy(ctx, init, strategy, N, seed, options);
}

}  // namespace physcal
