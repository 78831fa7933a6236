#include "physcal/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "physcal/error.hpp"
#include "physcal/normal.hpp"

namespace physcal {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}  // namespace

const char* to_string(Normalization n) { return n == Normalization::grid ? "grid" : "bounds"; }

Normalization normalization_from_string(const std::string& s) {
    if (s == "grid") return Normalization::grid;
    if (s == "bounds") return Normalization::bounds;
    throw InvalidInput("unknown normalization '" + s + "' (expected grid or bounds)");
}

void AcquisitionConfig::validate() const {
    require(w >= 0.0 && w <= 1.0, "weight w must lie in [0, 1]");
    require(power >= 1, "power p must be at least 1");
    require(alpha > 0.0 && std::isfinite(alpha), "alpha must be positive");
}

IntegrationNodes integration_nodes(const CandidatePool& pool, const std::vector<bool>& members) {
    require(members.size() == static_cast<std::size_t>(pool.size()), "mask does not match the pool");
    IntegrationNodes nodes;
    for (Eigen::Index i = 0; i < pool.size(); ++i) {
        if (members[static_cast<std::size_t>(i)]) nodes.pool_indices.push_back(i);
    }
    const auto m = static_cast<Eigen::Index>(nodes.pool_indices.size());
    nodes.points.resize(pool.dim(), m);
    for (Eigen::Index k = 0; k < m; ++k) nodes.points.col(k) = pool.points.col(nodes.pool_indices[k]);
    nodes.weights = Eigen::VectorXd::Constant(m, m > 0 ? 1.0 / static_cast<double>(m) : 0.0);
    return nodes;
}

// ---------------------------------------------------------------------------

VarianceReduction::VarianceReduction(const GPModel& model, const IntegrationNodes& nodes)
    : model_(&model), nodes_(&nodes) {
    require(nodes.size() > 0, "integration needs at least one node");
    node_solve_ = model.solve_cross(nodes.points);
    const double prior = model.params().prior_variance();
    node_var_ = (prior - node_solve_.colwise().squaredNorm().transpose().array()).max(0.0).min(prior);
    total_ = nodes.weights.dot(node_var_);
}

Eigen::VectorXd VarianceReduction::node_reductions(PointRef x_cand, bool& ok) const {
    AppendedRow row;
    try {
        row = append_row(*model_, x_cand);
    } catch (const NumericalError&) {
        ok = false;
        return {};
    }
    ok = true;
    // Last entry of L_{n+1}^-1 k(s, X_{n+1}) for every node s.
    const Eigen::VectorXd k_new = cross_covariance(model_->params(), nodes_->points, x_cand);
    const Eigen::VectorXd last = (k_new - node_solve_.transpose() * row.cross) / row.pivot;
    return last.array().square().min(node_var_.array());
}

double VarianceReduction::reduction(PointRef x_cand) const {
    bool ok = false;
    const Eigen::VectorXd r = node_reductions(x_cand, ok);
    if (!ok) return kNegInf;
    return nodes_->weights.dot(r);
}

double VarianceReduction::integrated_posterior_variance(PointRef x_cand) const {
    bool ok = false;
    const Eigen::VectorXd r = node_reductions(x_cand, ok);
    if (!ok) return kNaN;
    return nodes_->weights.dot(node_var_ - r);
}

double j_f(const GPModel& f_model, PointRef x_cand, const IntegrationNodes& nodes) {
    return VarianceReduction(f_model, nodes).reduction(x_cand);
}

// With t = (h - mean) / sd, b = (xi - mean) / sd and a = b - alpha:
//   J_h = sd^2 * int_a^b (alpha^2 - (t - b)^2) phi(t) dt
//       = sd^2 * [(alpha^2 - 1 - b^2) (Phi(b) - Phi(a)) - b phi(b) + (b + alpha) phi(a)]
// using int t^2 phi = Phi - t phi and int t phi = -phi.
double j_h(double mean, double sd, double alpha, double xi) {
    require(alpha > 0.0, "alpha must be positive");
    if (!(sd > 0.0)) return 0.0;
    const double b = (xi - mean) / sd;
    const double a = b - alpha;
    const double mass = normal_interval(a, b);
    const double bracket = (alpha * alpha - 1.0 - b * b) * mass - b * normal_pdf(b) + (b + alpha) * normal_pdf(a);
    const double eta2 = alpha * alpha * sd * sd;
    return std::clamp(sd * sd * bracket, 0.0, eta2);
}

double j_h(const GPModel& h_model, PointRef x_cand, double alpha, double xi) {
    const Prediction p = h_model.predict(x_cand);
    return j_h(p.mean, std::sqrt(p.variance), alpha, xi);
}

// ---------------------------------------------------------------------------

Normalized normalize_grid(std::span<const double> raw) {
    Normalized out;
    out.values.assign(raw.size(), kNaN);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (double v : raw) {
        if (!std::isfinite(v)) continue;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (!(hi >= lo)) return out;  // nothing finite
    const double range = hi - lo;
    out.degenerate = !(range > 0.0);
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (!std::isfinite(raw[i])) continue;
        out.values[i] = out.degenerate ? 0.0 : std::clamp((raw[i] - lo) / range, 0.0, 1.0);
    }
    return out;
}

Normalized normalize_bounds(std::span<const double> raw, double upper_bound) {
    if (!(upper_bound > 0.0) || !std::isfinite(upper_bound)) {
        Normalized out = normalize_grid(raw);
        out.fallback = true;
        return out;
    }
    Normalized out;
    out.values.assign(raw.size(), kNaN);
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (!std::isfinite(raw[i])) continue;
        out.values[i] = std::max(raw[i], 0.0) / upper_bound;
    }
    return out;
}

double jf_upper_bound(const GPModel& f_model, const IntegrationNodes& nodes) {
    const BatchPrediction pred = f_model.predict(nodes.points);
    return nodes.weights.dot(pred.variance);
}

double jh_upper_bound(const GPModel& h_model, const CandidatePool& pool, const std::vector<bool>& in_s,
                      double alpha) {
    require(in_s.size() == static_cast<std::size_t>(pool.size()), "mask does not match the pool");
    const BatchPrediction pred = h_model.predict(pool.points);
    double sup = 0.0;
    for (Eigen::Index i = 0; i < pool.size(); ++i) {
        if (in_s[static_cast<std::size_t>(i)]) sup = std::max(sup, pred.variance[i]);
    }
    return alpha * alpha * sup;
}

double integrated_j(double jf_norm, double jh_norm, const AcquisitionConfig& cfg) {
    if (cfg.w == 0.0) return jf_norm;
    if (cfg.w == 1.0) return jh_norm;
    const double a = std::max(jf_norm, 0.0);
    const double b = std::max(jh_norm, 0.0);
    if (cfg.power == 1) return (1.0 - cfg.w) * a + cfg.w * b;
    const double p = static_cast<double>(cfg.power);
    return std::pow((1.0 - cfg.w) * std::pow(a, p) + cfg.w * std::pow(b, p), 1.0 / p);
}

// ---------------------------------------------------------------------------

Selection select_next(const GPModel& f_model, const GPModel& h_model, const CandidatePool& pool,
                      const SafeMask& mask, const SafetyConfig& safety, const AcquisitionConfig& acq,
                      const std::vector<bool>* available) {
    acq.validate();
    const auto m = static_cast<std::size_t>(pool.size());
    require(mask.in_s.size() == m && mask.in_s_plus.size() == m, "mask does not match the pool");
    require(!available || available->size() == m, "availability flags do not match the pool");

    AcquisitionScores sc;
    sc.pool_id = pool.id;
    sc.candidate.assign(m, false);
    sc.jf_raw.assign(m, kNaN);
    sc.jh_raw.assign(m, kNaN);
    for (std::size_t i = 0; i < m; ++i) sc.candidate[i] = mask.in_s[i] && (!available || (*available)[i]);
    if (std::none_of(sc.candidate.begin(), sc.candidate.end(), [](bool b) { return b; })) {
        throw InvalidInput("select_next: no candidate inside the safe region");
    }

    const IntegrationNodes nodes = integration_nodes(pool, mask.in_s_plus);
    const VarianceReduction vr(f_model, nodes);
    const BatchPrediction hpred = h_model.predict(pool.points);

    double h_sup = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        if (mask.in_s[i]) h_sup = std::max(h_sup, hpred.variance[k]);
        if (!sc.candidate[i]) continue;
        const double jf = vr.reduction(pool.points.col(k));
        if (!std::isfinite(jf)) {
            ++sc.excluded;
            continue;
        }
        sc.jf_raw[i] = jf;
        sc.jh_raw[i] = j_h(hpred.mean[k], std::sqrt(hpred.variance[k]), acq.alpha, safety.xi);
    }
    sc.jf_bound = vr.integrated_variance();
    sc.jh_bound = acq.alpha * acq.alpha * h_sup;

    Normalized nf, nh;
    if (acq.normalization == Normalization::grid) {
        nf = normalize_grid(sc.jf_raw);
        nh = normalize_grid(sc.jh_raw);
    } else {
        nf = normalize_bounds(sc.jf_raw, sc.jf_bound);
        nh = normalize_bounds(sc.jh_raw, sc.jh_bound);
    }
    sc.jf_norm = std::move(nf.values);
    sc.jh_norm = std::move(nh.values);
    sc.jf_degenerate = nf.degenerate;
    sc.jh_degenerate = nh.degenerate;
    sc.bounds_fallback = nf.fallback || nh.fallback;

    sc.j_integrated.assign(m, kNaN);
    double best = kNegInf;
    sc.j_raw_max = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        if (!std::isfinite(sc.jf_raw[i])) continue;
        const double j = integrated_j(sc.jf_norm[i], sc.jh_norm[i], acq);
        sc.j_integrated[i] = j;
        sc.j_raw_max = std::max(sc.j_raw_max, integrated_j(sc.jf_raw[i], sc.jh_raw[i], acq));
        if (j > best) {
            best = j;
            sc.selected_index = static_cast<Eigen::Index>(i);
        }
    }
    if (sc.selected_index < 0) throw NumericalError("select_next: every candidate failed to score");

    Selection sel;
    sel.pool_index = sc.selected_index;
    sel.point = pool.points.col(sc.selected_index);
    sel.scores = std::move(sc);
    return sel;
}

bool pareto_check(const AcquisitionScores& scores, Optimality kind) {
    const Eigen::Index s = scores.selected_index;
    if (s < 0) return false;
    const auto si = static_cast<std::size_t>(s);
    const double f0 = scores.jf_raw[si];
    const double h0 = scores.jh_raw[si];
    for (std::size_t i = 0; i < scores.jf_raw.size(); ++i) {
        if (i == si || !std::isfinite(scores.jf_raw[i]) || !std::isfinite(scores.jh_raw[i])) continue;
        const double f = scores.jf_raw[i];
        const double h = scores.jh_raw[i];
        if (kind == Optimality::strong) {
            if (f >= f0 && h >= h0 && (f > f0 || h > h0)) return false;
        } else if (f > f0 && h > h0) {
            return false;
        }
    }
    return true;
}

std::string scores_to_csv(const AcquisitionScores& scores, const SafeMask& mask) {
    std::ostringstream os;
    os.precision(17);
    os << "pool_index,in_S,in_S_plus,jf_raw,jh_raw,jf_norm,jh_norm,j,selected\n";
    auto put = [&os](double v) {
        if (std::isfinite(v)) os << v;
    };
    for (std::size_t i = 0; i < scores.jf_raw.size(); ++i) {
        os << i << ',' << (mask.in_s[i] ? 1 : 0) << ',' << (mask.in_s_plus[i] ? 1 : 0) << ',';
        put(scores.jf_raw[i]);
        os << ',';
        put(scores.jh_raw[i]);
        os << ',';
        put(scores.jf_norm[i]);
        os << ',';
        put(scores.jh_norm[i]);
        os << ',';
        put(scores.j_integrated[i]);
        os << ',' << (static_cast<Eigen::Index>(i) == scores.selected_index ? 1 : 0) << '\n';
    }
    return os.str();
}

}  // namespace physcal
