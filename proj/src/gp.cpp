#include "physcal/gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "physcal/error.hpp"

namespace physcal {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

void check_dims(const KernelParams& params, Eigen::Index da, Eigen::Index db) {
    if (da != db || da != params.dim()) {
        std::ostringstream os;
        os << "kernel dimension mismatch: a=" << da << " b=" << db
           << " lengthscales=" << params.dim();
        throw InvalidInput(os.str());
    }
}

double scaled_sqdist(const Eigen::VectorXd& inv_ls, PointRef a, PointRef b) {
    return ((a - b).cwiseProduct(inv_ls)).squaredNorm();
}

}  // namespace

void KernelParams::validate(Eigen::Index dim) const {
    if (!(scale >= 0.0) || !std::isfinite(scale)) throw InvalidInput("kernel scale must be >= 0");
    if (!(nugget >= 0.0) || !std::isfinite(nugget)) throw InvalidInput("nugget must be >= 0");
    if (lengthscales.size() == 0) throw InvalidInput("kernel needs at least one lengthscale");
    if (dim >= 0 && lengthscales.size() != dim) {
        throw InvalidInput("lengthscale count does not match the input dimension");
    }
    for (Eigen::Index d = 0; d < lengthscales.size(); ++d) {
        if (!(lengthscales[d] > 0.0) || !std::isfinite(lengthscales[d])) {
            throw InvalidInput("lengthscales must be positive and finite");
        }
    }
}

double kernel_cross(const KernelParams& params, PointRef a, PointRef b) {
    check_dims(params, a.size(), b.size());
    const Eigen::VectorXd inv_ls = params.lengthscales.cwiseInverse();
    return params.signal_variance() * std::exp(-0.5 * scaled_sqdist(inv_ls, a, b));
}

double kernel_eval(const KernelParams& params, PointRef a, PointRef b) {
    double k = kernel_cross(params, a, b);
    if (a.data() == b.data()) k += params.nugget;
    return k;
}

Eigen::MatrixXd cross_covariance(const KernelParams& params, const Eigen::MatrixXd& A,
                                 const Eigen::MatrixXd& B) {
    check_dims(params, A.rows(), B.rows());
    const Eigen::VectorXd inv_ls = params.lengthscales.cwiseInverse();
    const Eigen::MatrixXd As = inv_ls.asDiagonal() * A;
    const Eigen::MatrixXd Bs = inv_ls.asDiagonal() * B;
    // ||a - b||^2 = ||a||^2 + ||b||^2 - 2 a.b, clipped at zero against roundoff
    const Eigen::VectorXd na = As.colwise().squaredNorm();
    const Eigen::VectorXd nb = Bs.colwise().squaredNorm();
    Eigen::MatrixXd D = -2.0 * As.transpose() * Bs;
    D.colwise() += na;
    D.rowwise() += nb.transpose();
    const double s2 = params.signal_variance();
    return D.unaryExpr([s2](double v) { return s2 * std::exp(-0.5 * std::max(v, 0.0)); });
}

Eigen::MatrixXd gram_matrix(const KernelParams& params, const Eigen::MatrixXd& X) {
    require(X.cols() > 0, "gram_matrix needs at least one point");
    const Eigen::Index n = X.cols();
    check_dims(params, X.rows(), X.rows());
    const Eigen::VectorXd inv_ls = params.lengthscales.cwiseInverse();
    const double s2 = params.signal_variance();
    Eigen::MatrixXd K(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        K(j, j) = s2 + params.nugget;
        for (Eigen::Index i = j + 1; i < n; ++i) {
            const double v = s2 * std::exp(-0.5 * scaled_sqdist(inv_ls, X.col(i), X.col(j)));
            K(i, j) = v;
            K(j, i) = v;
        }
    }
    return K;
}

Eigen::MatrixXd stable_cholesky(const Eigen::MatrixXd& K, double* jitter_used) {
    Eigen::LLT<Eigen::MatrixXd> llt(K);
    if (llt.info() == Eigen::Success) {
        if (jitter_used) *jitter_used = 0.0;
        return llt.matrixL();
    }
    const Eigen::Index n = K.rows();
    for (double jitter = 1e-10; jitter <= 1e-6 * 1.0001; jitter *= 10.0) {
        llt.compute(K + jitter * Eigen::MatrixXd::Identity(n, n));
        if (llt.info() == Eigen::Success) {
            if (jitter_used) *jitter_used = jitter;
            return llt.matrixL();
        }
    }
    std::ostringstream os;
    os << "Cholesky factorization failed for a " << n << "x" << n
       << " Gram matrix even with jitter 1e-6 (diag min " << K.diagonal().minCoeff() << ")";
    throw NumericalError(os.str());
}

double log_marginal_likelihood(const KernelParams& params, const Eigen::MatrixXd& X,
                               const Eigen::VectorXd& obs) {
    params.validate(X.rows());
    require(obs.size() == X.cols(), "observation count does not match the design");
    const Eigen::MatrixXd L = stable_cholesky(gram_matrix(params, X));
    const Eigen::VectorXd v = L.triangularView<Eigen::Lower>().solve(obs);
    const double logdet = 2.0 * L.diagonal().array().log().sum();
    return -0.5 * v.squaredNorm() - 0.5 * logdet - 0.5 * static_cast<double>(obs.size()) * kLog2Pi;
}

LmlGradient log_marginal_likelihood_gradient(const KernelParams& params, const Eigen::MatrixXd& X,
                                             const Eigen::VectorXd& obs) {
    params.validate(X.rows());
    require(obs.size() == X.cols(), "observation count does not match the design");
    const Eigen::Index n = X.cols();
    const Eigen::Index D = X.rows();
    const Eigen::MatrixXd K = gram_matrix(params, X);
    const Eigen::MatrixXd L = stable_cholesky(K);
    const auto tri = L.triangularView<Eigen::Lower>();

    const Eigen::VectorXd alpha = tri.transpose().solve(tri.solve(obs));
    Eigen::MatrixXd Kinv = tri.solve(Eigen::MatrixXd::Identity(n, n));
    Kinv = tri.transpose().solve(Kinv);

    LmlGradient out;
    const double logdet = 2.0 * L.diagonal().array().log().sum();
    out.value = -0.5 * obs.dot(alpha) - 0.5 * logdet - 0.5 * static_cast<double>(n) * kLog2Pi;

    // W = alpha alpha' - K^-1; d ell = 0.5 * sum(W .* dK)
    const Eigen::MatrixXd W = alpha * alpha.transpose() - Kinv;
    Eigen::MatrixXd R = K;
    R.diagonal().array() -= params.nugget;  // noise-free part, kappa^2 * corr

    out.d_nugget = 0.5 * W.trace();
    out.d_scale = params.scale > 0.0 ? 0.5 * (W.cwiseProduct(R)).sum() * 2.0 / params.scale : 0.0;

    out.d_lengthscales.resize(D);
    for (Eigen::Index d = 0; d < D; ++d) {
        const double th = params.lengthscales[d];
        const double th3 = th * th * th;
        double acc = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) {
            for (Eigen::Index i = j + 1; i < n; ++i) {
                const double diff = X(d, i) - X(d, j);
                acc += 2.0 * W(i, j) * R(i, j) * diff * diff / th3;
            }
        }
        out.d_lengthscales[d] = 0.5 * acc;
    }
    return out;
}

// ---------------------------------------------------------------------------
// GPModel

GPModel GPModel::condition(KernelParams params, Eigen::MatrixXd X, Eigen::VectorXd obs,
                           double offset) {
    require(X.cols() >= 1, "GP needs at least one observation");
    require(obs.size() == X.cols(), "observation count does not match the design");
    params.validate(X.rows());
    for (Eigen::Index i = 0; i < obs.size(); ++i) {
        if (!std::isfinite(obs[i])) throw InvalidInput("observations must be finite");
    }
    GPModel m;
    m.params_ = std::move(params);
    m.X_ = std::move(X);
    m.obs_ = std::move(obs);
    m.offset_ = offset;
    m.chol_ = stable_cholesky(gram_matrix(m.params_, m.X_), &m.jitter_);
    const Eigen::VectorXd centered = m.obs_.array() - offset;
    const Eigen::VectorXd half = m.chol_.triangularView<Eigen::Lower>().solve(centered);
    m.alpha_ = m.chol_.transpose().triangularView<Eigen::Upper>().solve(half);
    return m;
}

Prediction GPModel::predict(PointRef x) const {
    require(x.size() == dim(), "prediction point has the wrong dimension");
    const Eigen::VectorXd k = cross_covariance(params_, X_, x);
    const Eigen::VectorXd v = chol_.triangularView<Eigen::Lower>().solve(k);
    const double prior = params_.prior_variance();
    Prediction p;
    p.mean = offset_ + k.dot(alpha_);
    p.variance = std::clamp(prior - v.squaredNorm(), 0.0, prior);
    return p;
}

BatchPrediction GPModel::predict(const Eigen::MatrixXd& points) const {
    require(points.rows() == dim(), "prediction points have the wrong dimension");
    const Eigen::MatrixXd K = cross_covariance(params_, X_, points);
    const Eigen::MatrixXd V = chol_.triangularView<Eigen::Lower>().solve(K);
    const double prior = params_.prior_variance();
    BatchPrediction out;
    out.mean = (K.transpose() * alpha_).array() + offset_;
    out.variance = (prior - V.colwise().squaredNorm().transpose().array()).max(0.0).min(prior);
    return out;
}

Eigen::MatrixXd GPModel::solve_cross(const Eigen::MatrixXd& points) const {
    return chol_.triangularView<Eigen::Lower>().solve(cross_covariance(params_, X_, points));
}

GPModel GPModel::with_observation(PointRef x, double obs) const {
    require(x.size() == dim(), "new observation has the wrong dimension");
    Eigen::MatrixXd X(X_.rows(), X_.cols() + 1);
    X << X_, x;
    Eigen::VectorXd y(obs_.size() + 1);
    y << obs_, obs;
    GPModel m = condition(params_, std::move(X), std::move(y), offset_);
    m.info_ = info_;
    return m;
}

// ---------------------------------------------------------------------------
// Rank-one append

AppendedRow append_row(const GPModel& model, PointRef x_new) {
    require(x_new.size() == model.dim(), "appended point has the wrong dimension");
    const KernelParams& p = model.params();
    const Eigen::VectorXd k = cross_covariance(p, model.inputs(), x_new);
    AppendedRow row;
    row.cross = model.cholesky().triangularView<Eigen::Lower>().solve(k);
    const double diag = p.prior_variance() + model.jitter();
    const double schur = diag - row.cross.squaredNorm();
    if (schur > 0.0) {
        row.pivot = std::sqrt(schur);
        return row;
    }
    for (double jitter = 1e-10; jitter <= 1e-6 * 1.0001; jitter *= 10.0) {
        if (schur + jitter > 0.0) {
            row.jitter = jitter;
            row.pivot = std::sqrt(schur + jitter);
            return row;
        }
    }
    std::ostringstream os;
    os << "non-positive Schur complement " << schur << " when appending a point";
    throw NumericalError(os.str());
}

Eigen::MatrixXd chol_append(const GPModel& model, PointRef x_new) {
    const AppendedRow row = append_row(model, x_new);
    const Eigen::Index n = model.size();
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n + 1, n + 1);
    L.topLeftCorner(n, n) = model.cholesky();
    L.block(n, 0, 1, n) = row.cross.transpose();
    L(n, n) = row.pivot;
    return L;
}

double conditioned_variance(const GPModel& model, const Eigen::MatrixXd& appended_factor,
                            PointRef x_cand, PointRef s) {
    const Eigen::Index n = model.size();
    require(appended_factor.rows() == n + 1 && appended_factor.cols() == n + 1,
            "appended factor has the wrong size");
    require(s.size() == model.dim() && x_cand.size() == model.dim(),
            "conditioned_variance: dimension mismatch");
    const KernelParams& p = model.params();
    Eigen::VectorXd ks(n + 1);
    ks.head(n) = cross_covariance(p, model.inputs(), s);
    ks[n] = kernel_cross(p, x_cand, s);
    const Eigen::VectorXd w = appended_factor.triangularView<Eigen::Lower>().solve(ks);
    const double prior = p.prior_variance();
    return std::clamp(prior - w.squaredNorm(), 0.0, prior);
}

double conditioned_variance(const GPModel& model, PointRef x_cand, PointRef s) {
    return conditioned_variance(model, chol_append(model, x_cand), x_cand, s);
}

// ---------------------------------------------------------------------------
// Hyperparameter fitting

namespace {

// Optimization happens over
//   u = [log theta_1 .. log theta_D, log kappa^2, (log nu^2)]
struct LogSpace {
    Eigen::Index dim = 0;
    bool estimate_noise = true;
    double fixed_nugget = 0.0;
    Eigen::VectorXd lower, upper;
    Eigen::VectorXd start_lower, start_upper;

    Eigen::Index size() const { return dim + 1 + (estimate_noise ? 1 : 0); }

    KernelParams to_params(const Eigen::VectorXd& u) const {
        KernelParams p;
        p.lengthscales = u.head(dim).array().exp();
        p.scale = std::exp(0.5 * u[dim]);
        p.nugget = estimate_noise ? std::exp(u[dim + 1]) : fixed_nugget;
        return p;
    }

    Eigen::VectorXd from_params(const KernelParams& p) const {
        Eigen::VectorXd u(size());
        u.head(dim) = p.lengthscales.array().log();
        u[dim] = std::log(std::max(p.signal_variance(), 1e-300));
        if (estimate_noise) u[dim + 1] = std::log(std::max(p.nugget, 1e-300));
        return u.cwiseMax(lower).cwiseMin(upper);
    }

    Eigen::VectorXd clamp(const Eigen::VectorXd& u) const { return u.cwiseMax(lower).cwiseMin(upper); }
};

struct Evaluation {
    bool ok = false;
    double value = 0.0;  // negative log marginal likelihood
    Eigen::VectorXd grad;
};

Evaluation evaluate(const LogSpace& space, const Eigen::VectorXd& u, const Eigen::MatrixXd& X,
                    const Eigen::VectorXd& obs) {
    Evaluation e;
    try {
        const KernelParams p = space.to_params(u);
        const LmlGradient g = log_marginal_likelihood_gradient(p, X, obs);
        if (!std::isfinite(g.value)) return e;
        e.value = -g.value;
        e.grad.resize(space.size());
        for (Eigen::Index d = 0; d < space.dim; ++d) {
            e.grad[d] = -g.d_lengthscales[d] * p.lengthscales[d];
        }
        e.grad[space.dim] = -0.5 * g.d_scale * p.scale;
        if (space.estimate_noise) e.grad[space.dim + 1] = -g.d_nugget * p.nugget;
        e.ok = e.grad.allFinite();
    } catch (const NumericalError&) {
        e.ok = false;
    }
    return e;
}

struct LocalResult {
    bool ok = false;
    Eigen::VectorXd u;
    double value = 0.0;
    std::vector<double> trajectory;
};

// Projected BFGS with Armijo backtracking, minimizing the negative LML.
LocalResult bfgs_minimize(const LogSpace& space, Eigen::VectorXd u, const Eigen::MatrixXd& X,
                          const Eigen::VectorXd& obs, double tol, int max_iter, bool record) {
    LocalResult res;
    u = space.clamp(u);
    Evaluation cur = evaluate(space, u, X, obs);
    if (!cur.ok) return res;
    res.ok = true;
    if (record) res.trajectory.push_back(-cur.value);

    const Eigen::Index P = space.size();
    Eigen::MatrixXd H = Eigen::MatrixXd::Identity(P, P);
    auto project_dir = [&](Eigen::VectorXd d) {
        for (Eigen::Index i = 0; i < P; ++i) {
            if ((u[i] <= space.lower[i] && d[i] < 0.0) || (u[i] >= space.upper[i] && d[i] > 0.0)) d[i] = 0.0;
        }
        return d;
    };

    for (int it = 0; it < max_iter; ++it) {
        Eigen::VectorXd dir = project_dir(-H * cur.grad);
        if (cur.grad.dot(dir) >= 0.0) {
            H.setIdentity();
            dir = project_dir(-cur.grad);
            if (cur.grad.dot(dir) >= -1e-14) break;
        }
        const double maxstep = dir.cwiseAbs().maxCoeff();
        if (maxstep > 2.0) dir *= 2.0 / maxstep;

        double t = 1.0;
        bool accepted = false;
        Eigen::VectorXd u_new;
        Evaluation next;
        for (int ls = 0; ls < 40; ++ls) {
            u_new = space.clamp(u + t * dir);
            next = evaluate(space, u_new, X, obs);
            if (next.ok && next.value <= cur.value + 1e-4 * cur.grad.dot(u_new - u)) {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) break;

        const Eigen::VectorXd s = u_new - u;
        const Eigen::VectorXd y = next.grad - cur.grad;
        const double sy = s.dot(y);
        const double improvement = cur.value - next.value;
        u = u_new;
        cur = next;
        if (record) res.trajectory.push_back(-cur.value);
        if (sy > 1e-12) {
            const double rho = 1.0 / sy;
            const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(P, P);
            H = (I - rho * s * y.transpose()) * H * (I - rho * y * s.transpose()) + rho * s * s.transpose();
        }
        if (improvement < tol) break;
    }
    res.u = u;
    res.value = cur.value;
    return res;
}

// Random Latin hypercube in [0,1]^dims with `n` rows.
Eigen::MatrixXd unit_lhs(int n, Eigen::Index dims, std::mt19937_64& rng) {
    Eigen::MatrixXd out(n, dims);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<int> perm(n);
    for (Eigen::Index d = 0; d < dims; ++d) {
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        for (int i = 0; i < n; ++i) out(i, d) = (perm[i] + unif(rng)) / n;
    }
    return out;
}

}  // namespace

GPModel fit_gp(const Eigen::MatrixXd& X, const Eigen::VectorXd& obs, const FitConfig& cfg) {
    const Eigen::Index n = X.cols();
    const Eigen::Index D = X.rows();
    require(n >= 2, "fit_gp needs at least two observations");
    require(obs.size() == n, "observation count does not match the design");
    require(cfg.starts >= 1, "fit_gp needs at least one start");
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!std::isfinite(obs[i])) throw InvalidInput("observations must be finite");
    }

    const double offset = cfg.center ? obs.mean() : 0.0;
    const Eigen::VectorXd y = obs.array() - offset;
    double spread = cfg.center ? y.squaredNorm() / static_cast<double>(n)
                               : obs.squaredNorm() / static_cast<double>(n);
    spread = std::max(spread, 1e-10);

    LogSpace space;
    space.dim = D;
    space.estimate_noise = cfg.noise == NoiseMode::estimated;
    space.fixed_nugget = cfg.fixed_nugget;
    const Eigen::Index P = space.size();
    space.lower.resize(P);
    space.upper.resize(P);
    space.start_lower.resize(P);
    space.start_upper.resize(P);
    for (Eigen::Index d = 0; d < D; ++d) {
        double range = X.row(d).maxCoeff() - X.row(d).minCoeff();
        if (!(range > 1e-12)) range = 1.0;
        space.lower[d] = std::log(1e-3 * range);
        space.upper[d] = std::log(1e2 * range);
        space.start_lower[d] = std::log(1e-2 * range);
        space.start_upper[d] = std::log(1e1 * range);
    }
    space.lower[D] = std::log(1e-4 * spread);
    space.upper[D] = std::log(1e3 * spread);
    space.start_lower[D] = std::log(1e-2 * spread);
    space.start_upper[D] = std::log(1e2 * spread);
    if (space.estimate_noise) {
        const double floor = std::max(cfg.nugget_floor, 1e-300);
        space.lower[D + 1] = std::log(floor);
        space.upper[D + 1] = std::log(std::max(spread, floor));
        space.start_lower[D + 1] = std::log(std::max(floor, 1e-6 * spread));
        space.start_upper[D + 1] = std::log(std::max(floor, 1e-1 * spread));
    }

    std::mt19937_64 rng(cfg.seed);
    const int random_starts = cfg.warm_start ? cfg.starts - 1 : cfg.starts;
    std::vector<Eigen::VectorXd> starts;
    if (cfg.warm_start) {
        KernelParams ws = *cfg.warm_start;
        ws.validate(D);
        starts.push_back(space.from_params(ws));
    }
    if (random_starts > 0) {
        const Eigen::MatrixXd design = unit_lhs(random_starts, P, rng);
        for (int s = 0; s < random_starts; ++s) {
            Eigen::VectorXd u(P);
            for (Eigen::Index i = 0; i < P; ++i) {
                u[i] = space.start_lower[i] + design(s, i) * (space.start_upper[i] - space.start_lower[i]);
            }
            starts.push_back(u);
        }
    }

    FitInfo info;
    const Evaluation initial = evaluate(space, starts.front(), X, y);
    info.initial_lml = initial.ok ? -initial.value : -std::numeric_limits<double>::infinity();

    bool have_best = false;
    Eigen::VectorXd best_u = starts.front();
    double best_value = std::numeric_limits<double>::infinity();
    for (const Eigen::VectorXd& u0 : starts) {
        ++info.starts_run;
        LocalResult r = bfgs_minimize(space, u0, X, y, cfg.tolerance, cfg.max_iterations,
                                      cfg.record_trajectories);
        if (cfg.record_trajectories) info.trajectories.push_back(std::move(r.trajectory));
        if (!r.ok) {
            ++info.starts_failed;
            continue;
        }
        if (!have_best || r.value < best_value) {
            have_best = true;
            best_value = r.value;
            best_u = r.u;
        }
    }

    KernelParams params;
    if (!have_best || !(-best_value > info.initial_lml)) {
        info.warning = true;
        info.message = have_best ? "no start improved on the initial parameters"
                                 : "every start failed to factorize";
        params = space.to_params(starts.front());
        info.lml = info.initial_lml;
    } else {
        params = space.to_params(best_u);
        info.lml = -best_value;
    }
    GPModel model = GPModel::condition(params, X, obs, offset);
    model.set_fit_info(std::move(info));
    return model;
}

}  // namespace physcal
