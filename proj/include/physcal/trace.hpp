#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "physcal/gp.hpp"

namespace physcal {

enum class RunStatus { completed, stopped_early, aborted };

const char* to_string(RunStatus status);

// One active query.
struct IterationRecord {
    int index = 0;
    DesignPoint x;
    Eigen::Index pool_index = -1;
    double y = 0.0;
    double z = 0.0;
    bool true_safe = true;  // noiseless h(x) < xi, never shown to the strategy
    bool est_safe = false;  // x was in S_n when it was selected
    bool fallback = false;  // S_n was empty and the most-probably-safe point was used
    double jf = 0.0;
    double jh = 0.0;
    double j = 0.0;
    double j_raw_max = 0.0;  // max over S_n of the scalarized raw criteria
    int safe_count = 0;       // |S_n ∩ pool| at selection
    int safe_plus_count = 0;  // |S_n^+ ∩ pool| at selection
    double max_var_f = 0.0;   // pool max of Var(f_n) after the update
    double max_var_h = 0.0;
    double signal_var_f = 0.0;  // kappa^2 of the updated target model
    double signal_var_h = 0.0;
    int region_mismatch = 0;  // |S_n xor true safe set| on the pool after the update
    double test_mse = 0.0;
    double test_mae = 0.0;
    int cumulative_failures = 0;
};

struct RunTrace {
    std::string strategy;
    std::uint64_t seed = 0;
    RunStatus status = RunStatus::completed;
    std::string message;
    int init_size = 0;
    int init_failures = 0;
    int oracle_calls = 0;
    double initial_mse = 0.0;
    double initial_mae = 0.0;
    int initial_region_mismatch = 0;
    std::vector<IterationRecord> records;

    int failures() const { return records.empty() ? 0 : records.back().cumulative_failures; }
    int fallbacks() const;
    double final_mse() const { return records.empty() ? initial_mse : records.back().test_mse; }
    double final_mae() const { return records.empty() ? initial_mae : records.back().test_mae; }
};

// Fixed trace CSV layout, one row per active query.
std::string trace_csv_header(Eigen::Index dim);
std::string trace_to_csv(const RunTrace& trace);

}  // namespace physcal
