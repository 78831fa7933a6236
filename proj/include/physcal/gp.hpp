#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace physcal {

// A point of the design space. Designs are stored column-wise (D x n), so a
// single point is always a column vector.
using DesignPoint = Eigen::VectorXd;
using PointRef = Eigen::Ref<const Eigen::VectorXd>;

// ARD squared-exponential kernel
//   k(a, b) = scale^2 * exp(-0.5 * sum_d (a_d - b_d)^2 / lengthscales_d^2) + nugget * delta(a, b)
// where delta is one only for the same training index (or the same point
// object), never for coordinate equality.
struct KernelParams {
    double scale = 1.0;            // kappa
    Eigen::VectorXd lengthscales;  // theta, one per input dimension
    double nugget = 1e-8;          // nu^2, observation noise variance

    double signal_variance() const { return scale * scale; }
    double prior_variance() const { return scale * scale + nugget; }
    Eigen::Index dim() const { return lengthscales.size(); }

    // Throws InvalidInput unless scale >= 0, nugget >= 0, lengthscales > 0
    // and (when dim >= 0) lengthscales.size() == dim.
    void validate(Eigen::Index dim = -1) const;
};

// Covariance between two points. The nugget is added only when `a` and `b`
// refer to the same storage (the same point object).
double kernel_eval(const KernelParams& params, PointRef a, PointRef b);

// Noise-free part of the kernel; used for every cross-covariance.
double kernel_cross(const KernelParams& params, PointRef a, PointRef b);

// Gram matrix K_n for the columns of X (D x n); nugget on the diagonal.
Eigen::MatrixXd gram_matrix(const KernelParams& params, const Eigen::MatrixXd& X);

// Cross-covariance matrix K(A, B), |A| x |B|, no nugget.
Eigen::MatrixXd cross_covariance(const KernelParams& params, const Eigen::MatrixXd& A,
                                 const Eigen::MatrixXd& B);

// Lower Cholesky factor of K with jitter escalation 1e-10 .. 1e-6 (x10 per
// step) on failure. `jitter_used` receives the diagonal shift that succeeded.
// Throws NumericalError when even 1e-6 fails.
Eigen::MatrixXd stable_cholesky(const Eigen::MatrixXd& K, double* jitter_used = nullptr);

// Log marginal likelihood of a zero-mean GP:
//   -0.5 obs' K^-1 obs - 0.5 log|K| - n/2 log(2 pi)
double log_marginal_likelihood(const KernelParams& params, const Eigen::MatrixXd& X,
                               const Eigen::VectorXd& obs);

struct LmlGradient {
    double value = 0.0;
    Eigen::VectorXd d_lengthscales;  // d ell / d theta_d
    double d_scale = 0.0;            // d ell / d kappa
    double d_nugget = 0.0;           // d ell / d nu^2
};

LmlGradient log_marginal_likelihood_gradient(const KernelParams& params, const Eigen::MatrixXd& X,
                                             const Eigen::VectorXd& obs);

enum class NoiseMode { fixed, estimated };

struct FitConfig {
    int starts = 8;
    std::uint64_t seed = 0;
    NoiseMode noise = NoiseMode::estimated;
    double fixed_nugget = 1e-6;   // used when noise == fixed
    double nugget_floor = 1e-8;   // lower bound when noise == estimated
    bool center = true;           // subtract the sample mean before fitting
    double tolerance = 1e-6;      // on the log marginal likelihood
    int max_iterations = 200;     // per start
    bool record_trajectories = false;
    // When present this point is evaluated first and counts as the initial
    // parameters that the starts have to improve on.
    std::optional<KernelParams> warm_start;
};

struct FitInfo {
    double lml = 0.0;
    double initial_lml = 0.0;
    int starts_run = 0;
    int starts_failed = 0;
    bool warning = false;  // no start improved on the initial parameters
    std::string message;
    // Accepted log-likelihood iterates for every start (only when requested).
    std::vector<std::vector<double>> trajectories;
};

struct Prediction {
    double mean = 0.0;
    double variance = 0.0;
};

struct BatchPrediction {
    Eigen::VectorXd mean;
    Eigen::VectorXd variance;
};

// Row appended to a Cholesky factor for one extra input: the new factor is
//   [ L        0     ]
//   [ cross'   pivot ]
struct AppendedRow {
    Eigen::VectorXd cross;  // L^-1 k(X, x_new)
    double pivot = 0.0;     // sqrt(Schur complement)
    double jitter = 0.0;
};

// Fitted GP posterior for one scalar process. Immutable once built.
class GPModel {
public:
    GPModel() = default;

    // Factorizes the Gram matrix of (params, X). `offset` is a constant prior
    // mean (zero unless the observations were centered during fitting).
    static GPModel condition(KernelParams params, Eigen::MatrixXd X, Eigen::VectorXd obs,
                             double offset = 0.0);

    const KernelParams& params() const { return params_; }
    const Eigen::MatrixXd& inputs() const { return X_; }
    const Eigen::VectorXd& observations() const { return obs_; }
    const Eigen::MatrixXd& cholesky() const { return chol_; }
    const Eigen::VectorXd& alpha() const { return alpha_; }
    double mean_offset() const { return offset_; }
    double jitter() const { return jitter_; }
    Eigen::Index size() const { return X_.cols(); }
    Eigen::Index dim() const { return X_.rows(); }

    const FitInfo& fit_info() const { return info_; }
    void set_fit_info(FitInfo info) { info_ = std::move(info); }

    // Predictive mean and variance of a fresh observation at x. The variance
    // is clamped to [0, scale^2 + nugget].
    Prediction predict(PointRef x) const;
    Prediction predict(const Eigen::VectorXd& x) const { return predict(PointRef(x)); }
    BatchPrediction predict(const Eigen::MatrixXd& points) const;

    // L^-1 K(X, points), used to reuse solves across many candidates.
    Eigen::MatrixXd solve_cross(const Eigen::MatrixXd& points) const;

    // Same model with one more observation, hyperparameters unchanged.
    GPModel with_observation(PointRef x, double obs) const;

private:
    KernelParams params_;
    Eigen::MatrixXd X_;
    Eigen::VectorXd obs_;
    Eigen::MatrixXd chol_;
    Eigen::VectorXd alpha_;
    double offset_ = 0.0;
    double jitter_ = 0.0;
    FitInfo info_;
};

// Maximizes the log marginal likelihood from several Latin-hypercube starts in
// log-parameter space and conditions on the winner. Requires n >= 2.
GPModel fit_gp(const Eigen::MatrixXd& X, const Eigen::VectorXd& obs, const FitConfig& cfg = {});

// Cross row and pivot of the Cholesky factor of K_{n+1} = Gram([X x_new]).
// Non-positive Schur complements get the same jitter escalation as
// stable_cholesky; throws NumericalError if that is not enough.
AppendedRow append_row(const GPModel& model, PointRef x_new);

// Full (n+1) x (n+1) lower factor obtained from append_row.
Eigen::MatrixXd chol_append(const GPModel& model, PointRef x_new);

// Var(y(s) | D_n and an observation at x_cand), i.e.
//   k(s) - k(s, X_{n+1})' K_{n+1}^-1 k(s, X_{n+1}),
// with X_{n+1} = [X_n x_cand]. Clamped to [0, k(s)].
double conditioned_variance(const GPModel& model, PointRef x_cand, PointRef s);
double conditioned_variance(const GPModel& model, const Eigen::MatrixXd& appended_factor,
                            PointRef x_cand, PointRef s);

}  // namespace physcal
