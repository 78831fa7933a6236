#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "physcal/gp.hpp"
#include "physcal/pool.hpp"

namespace physcal {

struct RunTrace;

// Confidence multiplier for a per-step failure probability p: Phi^-1(1 - p).
double beta_from_level(double p);

// Multiplier that spreads a total failure budget gamma evenly over N steps,
// i.e. Phi^-1(1 - gamma / N). Requires 0 < gamma < 1, N >= 1, gamma / N < 0.5.
double beta_from_budget(double gamma, int N);

struct SafetyConfig {
    double xi = 0.7;       // failure when h(x) >= xi
    double gamma = 0.001;  // total failure budget over the run
    int budget = 20;       // N, number of active queries
    double p_plus = 0.01;  // per-step level of the progressive region
    // Recompute beta from the queries still left instead of the initial N.
    bool reallocate_budget = false;

    double step_level() const { return gamma / budget; }
    double beta() const { return beta_from_budget(gamma, budget); }
    double beta_plus() const { return beta_from_level(p_plus); }
    // beta for the next query when `remaining` queries are left.
    double beta_at(int remaining) const;

    // 0 < gamma / N < p_plus < 1
    void validate() const;
};

// mean + beta * sqrt(variance) < xi
bool is_safe(double mean, double variance, double beta, double xi);
bool is_safe(const GPModel& h_model, PointRef x, double beta, double xi);

struct SafeMask {
    std::uint64_t pool_id = 0;
    std::vector<bool> in_s;       // operational safe region S_n
    std::vector<bool> in_s_plus;  // progressive safe region S_n^+

    std::size_t count_s() const;
    std::size_t count_s_plus() const;
    bool nested() const;  // in_s implies in_s_plus everywhere
};

SafeMask safe_mask(const GPModel& h_model, const CandidatePool& pool, double xi, double beta,
                   double beta_plus);
SafeMask safe_mask(const GPModel& h_model, const CandidatePool& pool, const SafetyConfig& cfg);

// Fraction of runs with at least one truly unsafe active query.
double empirical_failure_rate(std::span<const RunTrace> traces);

}  // namespace physcal
