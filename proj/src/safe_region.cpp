#include "physcal/safe_region.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "physcal/error.hpp"
#include "physcal/normal.hpp"
#include "physcal/trace.hpp"

namespace physcal {

double beta_from_level(double p) {
    require(p > 0.0 && p < 1.0, "failure level must lie in (0, 1)");
    return normal_quantile(1.0 - p);
}

double beta_from_budget(double gamma, int N) {
    require(gamma > 0.0 && gamma < 1.0, "failure budget gamma must lie in (0, 1)");
    require(N >= 1, "sampling budget N must be at least 1");
    const double p = gamma / N;
    require(p < 0.5, "gamma / N must be below 0.5");
    return beta_from_level(p);
}

double SafetyConfig::beta_at(int remaining) const {
    if (!reallocate_budget) return beta();
    return beta_from_budget(gamma, std::max(remaining, 1));
}

void SafetyConfig::validate() const {
    require(std::isfinite(xi), "xi must be finite");
    require(gamma > 0.0 && gamma < 1.0, "gamma must lie in (0, 1)");
    require(budget >= 1, "budget N must be at least 1");
    require(p_plus > 0.0 && p_plus < 1.0, "p_plus must lie in (0, 1)");
    if (!(step_level() < p_plus)) {
        std::ostringstream os;
        os << "gamma / N = " << step_level() << " must be below p_plus = " << p_plus;
        throw InvalidInput(os.str());
    }
}

bool is_safe(double mean, double variance, double beta, double xi) {
    return mean + beta * std::sqrt(std::max(variance, 0.0)) < xi;
}

bool is_safe(const GPModel& h_model, PointRef x, double beta, double xi) {
    const Prediction p = h_model.predict(x);
    return is_safe(p.mean, p.variance, beta, xi);
}

std::size_t SafeMask::count_s() const { return static_cast<std::size_t>(std::count(in_s.begin(), in_s.end(), true)); }

std::size_t SafeMask::count_s_plus() const {
    return static_cast<std::size_t>(std::count(in_s_plus.begin(), in_s_plus.end(), true));
}

bool SafeMask::nested() const {
    if (in_s.size() != in_s_plus.size()) return false;
    for (std::size_t i = 0; i < in_s.size(); ++i) {
        if (in_s[i] && !in_s_plus[i]) return false;
    }
    return true;
}

SafeMask safe_mask(const GPModel& h_model, const CandidatePool& pool, double xi, double beta,
                   double beta_plus) {
    require(pool.size() > 0, "safe_mask needs a nonempty pool");
    require(beta >= beta_plus, "beta must be at least beta_plus");
    const BatchPrediction pred = h_model.predict(pool.points);
    SafeMask mask;
    mask.pool_id = pool.id;
    const auto m = static_cast<std::size_t>(pool.size());
    mask.in_s.resize(m);
    mask.in_s_plus.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        mask.in_s[i] = is_safe(pred.mean[k], pred.variance[k], beta, xi);
        // Evaluated independently, then forced nested against roundoff.
        mask.in_s_plus[i] = mask.in_s[i] || is_safe(pred.mean[k], pred.variance[k], beta_plus, xi);
    }
    return mask;
}

SafeMask safe_mask(const GPModel& h_model, const CandidatePool& pool, const SafetyConfig& cfg) {
    return safe_mask(h_model, pool, cfg.xi, cfg.beta(), cfg.beta_plus());
}

double empirical_failure_rate(std::span<const RunTrace> traces) {
    if (traces.empty()) return 0.0;
    std::size_t failed = 0;
    for (const RunTrace& t : traces) {
        const bool any = std::any_of(t.records.begin(), t.records.end(),
                                     [](const IterationRecord& r) { return !r.true_safe; });
        if (any) ++failed;
    }
    return static_cast<double>(failed) / static_cast<double>(traces.size());
}

}  // namespace physcal
