#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "physcal/acquisition.hpp"
#include "physcal/gp.hpp"
#include "physcal/pool.hpp"
#include "physcal/problems.hpp"
#include "physcal/safe_region.hpp"
#include "physcal/trace.hpp"

namespace physcal {

enum class StrategyKind { physcal, random, alm, alc, safe_alm };

const char* to_string(StrategyKind kind);
StrategyKind strategy_kind_from_string(const std::string& s);

struct Strategy {
    StrategyKind kind = StrategyKind::physcal;
    std::string label;  // defaults to to_string(kind)
    AcquisitionConfig acq;
    SafetyConfig safety;
    // Piecewise-constant weight: entry (k, w) applies from query k onwards.
    std::vector<std::pair<int, double>> w_schedule;

    std::string name() const { return label.empty() ? to_string(kind) : label; }
    bool constrained() const { return kind == StrategyKind::physcal || kind == StrategyKind::safe_alm; }
    double weight_at(int query) const;
    void validate() const;
};

enum class AccuracyMetric { mse, mae };

struct AccuracyStop {
    AccuracyMetric metric = AccuracyMetric::mse;
    double threshold = std::numeric_limits<double>::infinity();
};

struct RunOptions {
    FitConfig fit;
    int refit_every = 1;      // refit hyperparameters after every k-th query
    bool warm_start = true;   // seed each refit with the previous hyperparameters
    bool allow_fallback = true;
    std::optional<AccuracyStop> accuracy;
    // Called with (query index, mask, scores) for PhysCAL selections.
    std::function<void(int, const SafeMask&, const AcquisitionScores&)> on_scores;
};

struct LabeledData {
    Eigen::MatrixXd X;  // D x n
    Eigen::VectorXd y;
    Eigen::VectorXd z;
    std::vector<bool> true_safe;

    Eigen::Index size() const { return X.cols(); }
    int safe_labeled(double xi) const;  // observations with z < xi
};

// Held-out points with noiseless target values.
struct TestSet {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;

    Eigen::Index size() const { return X.cols(); }
};

// Counts every call so runs can account for their oracle budget.
class Oracle {
public:
    Oracle(const ProblemSpec& problem, std::uint64_t seed) : problem_(&problem), rng_(seed) {}

    Observation observe(const DesignPoint& x) {
        ++calls_;
        return oracle_observe(*problem_, x, rng_);
    }
    LabeledData observe_all(const Eigen::MatrixXd& X);
    int calls() const { return calls_; }

private:
    const ProblemSpec* problem_;
    Rng rng_;
    int calls_ = 0;
};

// `count` uniformly drawn points with noiseless h < xi.
TestSet make_safe_test_set(const ProblemSpec& problem, int count, std::uint64_t seed);

struct RunResult {
    RunTrace trace;
    GPModel target_model;
    GPModel constraint_model;
};

struct RunContext {
    const ProblemSpec* problem = nullptr;
    const CandidatePool* pool = nullptr;
    const TestSet* test = nullptr;  // optional; metrics stay zero without it
};

// Sequential loop for any strategy. `init` must already be observed; `oracle`
// keeps counting from there.
RunResult run_strategy(const RunContext& ctx, const LabeledData& init, const Strategy& strategy, int N,
                       std::uint64_t seed, const RunOptions& options = {});

RunResult run_physcal(const RunContext& ctx, const LabeledData& init, const SafetyConfig& safety,
                      const AcquisitionConfig& acq, int N, std::uint64_t seed, const RunOptions& options = {});

RunResult run_baseline(const RunContext& ctx, const LabeledData& init, const Strategy& strategy, int N,
                       std::uint64_t seed, const RunOptions& options = {});

// Budget exhausted, or the latest test metric reached the accuracy threshold.
// Throws ConfigError when accuracy stopping is requested without a test set.
bool should_stop(const RunTrace& trace, int budget_left, const AccuracyStop* accuracy, bool have_test_set);

// Pool visiting order of the random baseline for a run seed.
std::vector<Eigen::Index> random_query_order(Eigen::Index pool_size, std::uint64_t seed);

// splitmix64 finalizer; derives independent stream seeds from one seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace physcal
