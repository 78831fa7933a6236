#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "physcal/gp.hpp"
#include "physcal/pool.hpp"
#include "physcal/safe_region.hpp"

namespace physcal {

enum class Normalization { grid, bounds };

const char* to_string(Normalization n);
Normalization normalization_from_string(const std::string& s);

struct AcquisitionConfig {
    double w = 0.4;      // weight on the expansion criterion
    int power = 1;       // exponent of the weighted power mean
    double alpha = 2.0;  // expansion magnifier, eta = alpha * sigma_h
    Normalization normalization = Normalization::grid;

    void validate() const;
};

// Quadrature nodes over S_n^+ with uniform weights 1 / |S_n^+ ∩ pool|.
struct IntegrationNodes {
    Eigen::MatrixXd points;  // D x m
    Eigen::VectorXd weights;
    std::vector<Eigen::Index> pool_indices;

    Eigen::Index size() const { return points.cols(); }
};

IntegrationNodes integration_nodes(const CandidatePool& pool, const std::vector<bool>& members);

// Integrated variance reduction over the nodes for one query at a candidate
//   J_f(x) = sum_s w_s [Var(f_n(s)) - Var(f_n(s | x))].
// Precomputes the node solves once; `reduction` is then O(n^2 + n m) per
// candidate via the appended Cholesky row.
class VarianceReduction {
public:
    VarianceReduction(const GPModel& model, const IntegrationNodes& nodes);

    // -infinity when the appended factor cannot be formed.
    double reduction(PointRef x_cand) const;
    // sum_s w_s Var(f_n(s | x)), the post-query integrated variance.
    double integrated_posterior_variance(PointRef x_cand) const;
    // sum_s w_s Var(f_n(s)), the upper bound of `reduction`.
    double integrated_variance() const { return total_; }

private:
    Eigen::VectorXd node_reductions(PointRef x_cand, bool& ok) const;

    const GPModel* model_;
    const IntegrationNodes* nodes_;
    Eigen::MatrixXd node_solve_;  // L^-1 K(X, S)
    Eigen::VectorXd node_var_;
    double total_ = 0.0;
};

double j_f(const GPModel& f_model, PointRef x_cand, const IntegrationNodes& nodes);

// Expected value of the boundary-closeness score
//   I = eta^2 - (h - xi)^2 on h in (xi - eta, xi), 0 otherwise,
// under h ~ N(mean, sd^2), with eta = alpha * sd. Closed form.
double j_h(double mean, double sd, double alpha, double xi);
double j_h(const GPModel& h_model, PointRef x_cand, double alpha, double xi);

struct Normalized {
    std::vector<double> values;  // NaN where the input was excluded
    bool degenerate = false;     // max == min, all outputs zero
    bool fallback = false;       // bounds were unusable, grid scaling used instead
};

// Min-max scaling over the finite entries; NaN and infinite entries are
// excluded from min/max and come back as NaN.
Normalized normalize_grid(std::span<const double> raw);

// Divide by a known upper bound (lower bound zero). Falls back to grid scaling
// when the bound is not strictly positive.
Normalized normalize_bounds(std::span<const double> raw, double upper_bound);

double jf_upper_bound(const GPModel& f_model, const IntegrationNodes& nodes);
// sup over S_n of alpha^2 Var(h_n(x)).
double jh_upper_bound(const GPModel& h_model, const CandidatePool& pool,
                      const std::vector<bool>& in_s, double alpha);

// ((1 - w) jf^p + w jh^p)^(1/p); exact passthrough at w = 0 and w = 1.
double integrated_j(double jf_norm, double jh_norm, const AcquisitionConfig& cfg);

struct AcquisitionScores {
    std::uint64_t pool_id = 0;
    // Per pool point; NaN for points that were not candidates.
    std::vector<double> jf_raw, jh_raw, jf_norm, jh_norm, j_integrated;
    std::vector<bool> candidate;
    Eigen::Index selected_index = -1;
    int excluded = 0;  // candidates dropped because the append failed
    bool jf_degenerate = false;
    bool jh_degenerate = false;
    bool bounds_fallback = false;
    double jf_bound = 0.0;
    double jh_bound = 0.0;
    // max over candidates of integrated_j applied to the raw (unscaled) criteria
    double j_raw_max = 0.0;
};

struct Selection {
    Eigen::Index pool_index = -1;
    DesignPoint point;
    AcquisitionScores scores;
};

// argmax of the integrated criterion over candidates in S_n (and `available`,
// when given). Ties go to the smallest pool index. Requires at least one
// candidate.
Selection select_next(const GPModel& f_model, const GPModel& h_model, const CandidatePool& pool,
                      const SafeMask& mask, const SafetyConfig& safety, const AcquisitionConfig& acq,
                      const std::vector<bool>* available = nullptr);

enum class Optimality { strong, weak };

// Is the selected point non-dominated on the raw (jf, jh) scores among all
// candidates? strong: no candidate >= in both with one strict.
// weak: no candidate strictly better in both.
bool pareto_check(const AcquisitionScores& scores, Optimality kind = Optimality::strong);

// Dumps the score table: pool_index,in_S,in_S_plus,jf_raw,jh_raw,jf_norm,jh_norm,j,selected
std::string scores_to_csv(const AcquisitionScores& scores, const SafeMask& mask);

}  // namespace physcal
