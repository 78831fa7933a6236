#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "physcal/error.hpp"
#include "physcal/gp.hpp"

using namespace physcal;

namespace {

KernelParams params(double scale, Eigen::VectorXd theta, double nugget) {
    KernelParams p;
    p.scale = scale;
    p.lengthscales = std::move(theta);
    p.nugget = nugget;
    return p;
}

Eigen::VectorXd vec(std::initializer_list<double> v) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

}  // namespace

TEST_CASE("kernel values") {
    const KernelParams p = params(1.0, vec({1.0, 1.0}), 0.01);
    const Eigen::VectorXd a = vec({0.5, 0.5});
    CHECK(kernel_eval(p, a, a) == doctest::Approx(1.01).epsilon(1e-15));

    // Equal coordinates in different objects do not pick up the nugget.
    const Eigen::VectorXd z1 = vec({0.0, 0.0});
    const Eigen::VectorXd z2 = vec({0.0, 0.0});
    CHECK(kernel_eval(p, z1, z2) == doctest::Approx(1.0).epsilon(1e-15));

    const KernelParams q = params(1.0, vec({1.0, 1.0}), 0.0);
    CHECK(kernel_eval(q, vec({0.0, 0.0}), vec({1.0, 0.0})) == doctest::Approx(std::exp(-0.5)).epsilon(1e-14));
    CHECK(std::abs(std::exp(-0.5) - 0.60653) < 1e-5);

    CHECK_THROWS_AS(kernel_eval(p, vec({0.0}), vec({0.0, 1.0})), InvalidInput);
    CHECK_THROWS_AS(kernel_eval(p, vec({0.0, 0.0, 0.0}), vec({0.0, 0.0, 1.0})), InvalidInput);
}

TEST_CASE("kernel parameter validation") {
    CHECK_THROWS_AS(params(1.0, vec({0.0}), 0.1).validate(), InvalidInput);
    CHECK_THROWS_AS(params(-1.0, vec({1.0}), 0.1).validate(), InvalidInput);
    CHECK_THROWS_AS(params(1.0, vec({1.0}), -0.1).validate(), InvalidInput);
    CHECK_THROWS_AS(params(1.0, vec({1.0}), 0.1).validate(2), InvalidInput);
    CHECK_NOTHROW(params(1.0, vec({1.0}), 0.0).validate(1));
}

TEST_CASE("gram matrix structure") {
    const KernelParams p = params(1.5, vec({0.3, 0.7}), 0.02);
    Eigen::MatrixXd one(2, 1);
    one << 0.2, 0.4;
    const Eigen::MatrixXd K1 = gram_matrix(p, one);
    REQUIRE(K1.rows() == 1);
    CHECK(K1(0, 0) == doctest::Approx(2.25 + 0.02));

    Eigen::MatrixXd two(2, 2);
    two << 0.2, 0.2, 0.4, 0.4;
    const Eigen::MatrixXd K2 = gram_matrix(p, two);
    CHECK(K2(0, 1) == doctest::Approx(2.25));
    CHECK(K2(1, 0) == doctest::Approx(2.25));
    CHECK(K2(0, 0) == doctest::Approx(2.27));
    CHECK(K2(1, 1) == doctest::Approx(2.27));

    std::mt19937_64 rng(5);
    const Eigen::MatrixXd X = oracle::uniform_points(2, 5, rng);
    const KernelParams r = params(1.0, vec({0.4, 0.4}), 1e-4);
    const Eigen::MatrixXd K = gram_matrix(r, X);
    CHECK((K - oracle::gram(1.0, r.lengthscales, 1e-4, X)).norm() < 1e-14);
    double jitter = -1.0;
    const Eigen::MatrixXd L = stable_cholesky(K, &jitter);
    CHECK(jitter == 0.0);
    CHECK((L * L.transpose() - K).norm() < 1e-12);
}

TEST_CASE("jitter escalation on duplicate inputs") {
    const KernelParams p = params(1.0, vec({0.5}), 0.0);
    Eigen::MatrixXd X(1, 3);
    X << 0.3, 0.3, 0.3;
    double jitter = 0.0;
    const Eigen::MatrixXd L = stable_cholesky(gram_matrix(p, X), &jitter);
    CHECK(jitter >= 1e-10);
    CHECK(jitter <= 1e-6);
    CHECK(L.allFinite());

    Eigen::MatrixXd bad = Eigen::MatrixXd::Identity(2, 2);
    bad(0, 1) = bad(1, 0) = 2.0;
    CHECK_THROWS_AS(stable_cholesky(bad), NumericalError);
}

TEST_CASE("log marginal likelihood") {
    Eigen::MatrixXd X(1, 1);
    X << 0.0;
    const KernelParams p = params(1.0, vec({1.0}), 0.0);
    CHECK(log_marginal_likelihood(p, X, vec({0.0})) == doctest::Approx(-0.5 * std::log(2.0 * M_PI)).epsilon(1e-14));
    CHECK(std::abs(-0.5 * std::log(2.0 * M_PI) + 0.91894) < 1e-5);

    std::mt19937_64 rng(9);
    const Eigen::MatrixXd X6 = oracle::uniform_points(2, 6, rng);
    const KernelParams q = params(0.8, vec({0.3, 0.5}), 0.01);
    const Eigen::MatrixXd K = oracle::gram(0.8, q.lengthscales, 0.01, X6);
    const double logdet = std::log(K.determinant());
    const double expected_zero = -0.5 * logdet - 3.0 * std::log(2.0 * M_PI);
    CHECK(log_marginal_likelihood(q, X6, Eigen::VectorXd::Zero(6)) == doctest::Approx(expected_zero).epsilon(1e-12));

    const Eigen::VectorXd obs = vec({0.1, -0.4, 0.3, 0.8, -0.2, 0.05});
    const double quad = obs.dot(Eigen::FullPivLU<Eigen::MatrixXd>(K).solve(obs));
    CHECK(log_marginal_likelihood(q, X6, obs) == doctest::Approx(expected_zero - 0.5 * quad).epsilon(1e-12));
}

TEST_CASE("log marginal likelihood gradient matches finite differences") {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 10; ++trial) {
        const Eigen::MatrixXd X = oracle::uniform_points(3, 12, rng);
        Eigen::VectorXd obs(12);
        for (Eigen::Index i = 0; i < obs.size(); ++i) obs[i] = std::sin(4.0 * X(0, i)) + X(1, i) * X(2, i);
        std::uniform_real_distribution<double> u(0.2, 1.0);
        const KernelParams p = params(u(rng) + 0.3, vec({u(rng), u(rng), u(rng)}), 0.01 * u(rng));
        const LmlGradient g = log_marginal_likelihood_gradient(p, X, obs);
        CHECK(g.value == doctest::Approx(log_marginal_likelihood(p, X, obs)).epsilon(1e-12));

        const auto rel = [](double a, double b) { return std::abs(a - b) / std::max(1e-8, std::abs(b)); };
        for (int d = 0; d < 3; ++d) {
            const double h = 1e-6 * p.lengthscales[d];
            KernelParams up = p, dn = p;
            up.lengthscales[d] += h;
            dn.lengthscales[d] -= h;
            const double fd = (log_marginal_likelihood(up, X, obs) - log_marginal_likelihood(dn, X, obs)) / (2 * h);
            CHECK(rel(g.d_lengthscales[d], fd) < 1e-4);
        }
        {
            const double h = 1e-6 * p.scale;
            KernelParams up = p, dn = p;
            up.scale += h;
            dn.scale -= h;
            const double fd = (log_marginal_likelihood(up, X, obs) - log_marginal_likelihood(dn, X, obs)) / (2 * h);
            CHECK(rel(g.d_scale, fd) < 1e-4);
        }
        {
            const double h = 1e-6 * p.nugget;
            KernelParams up = p, dn = p;
            up.nugget += h;
            dn.nugget -= h;
            const double fd = (log_marginal_likelihood(up, X, obs) - log_marginal_likelihood(dn, X, obs)) / (2 * h);
            CHECK(rel(g.d_nugget, fd) < 1e-4);
        }
    }
}

TEST_CASE("prediction matches a dense-solve oracle") {
    Eigen::MatrixXd X(1, 3);
    X << 0.1, 0.45, 0.9;
    const Eigen::VectorXd obs = vec({0.3, -0.2, 0.7});
    const KernelParams p = params(1.2, vec({0.25}), 0.003);
    const GPModel m = GPModel::condition(p, X, obs, 0.1);
    for (double t : {0.0, 0.2, 0.45, 0.6, 1.0}) {
        const Eigen::VectorXd x = vec({t});
        const Prediction got = m.predict(x);
        const oracle::Posterior want = oracle::posterior(1.2, p.lengthscales, 0.003, X, obs, 0.1, x);
        CHECK(std::abs(got.mean - want.mean) < 1e-10);
        CHECK(std::abs(got.variance - want.variance) < 1e-10);
    }

    Eigen::MatrixXd batch(1, 2);
    batch << 0.33, 0.77;
    const BatchPrediction bp = m.predict(batch);
    CHECK(bp.mean[1] == doctest::Approx(m.predict(vec({0.77})).mean).epsilon(1e-14));
    CHECK(bp.variance[0] == doctest::Approx(m.predict(vec({0.33})).variance).epsilon(1e-14));
    CHECK_THROWS_AS(m.predict(vec({0.1, 0.2})), InvalidInput);
}

TEST_CASE("prior recovery and interpolation") {
    Eigen::MatrixXd X(2, 3);
    X << 0.1, 0.5, 0.9, 0.2, 0.6, 0.3;
    const Eigen::VectorXd obs = vec({1.0, -0.5, 0.25});
    const KernelParams p = params(0.9, vec({0.1, 0.1}), 0.004);
    const GPModel m = GPModel::condition(p, X, obs);
    const Prediction far = m.predict(vec({5.0, 5.0}));
    CHECK(std::abs(far.mean) < 1e-6);
    CHECK(std::abs(far.variance - (0.81 + 0.004)) < 1e-6);

    const GPModel shifted = GPModel::condition(p, X, obs, 0.4);
    CHECK(std::abs(shifted.predict(vec({5.0, 5.0})).mean - 0.4) < 1e-6);

    const GPModel exact = GPModel::condition(params(0.9, vec({0.3, 0.3}), 0.0), X, obs);
    for (Eigen::Index i = 0; i < X.cols(); ++i) {
        const Prediction at = exact.predict(Eigen::VectorXd(X.col(i)));
        CHECK(std::abs(at.mean - obs[i]) < 1e-6);
        CHECK(at.variance >= 0.0);
        CHECK(at.variance < 1e-6);
    }
}

TEST_CASE("hyperparameter recovery on a known GP draw") {
    std::mt19937_64 rng(2024);
    const Eigen::MatrixXd X = oracle::uniform_points(2, 40, rng);
    const Eigen::VectorXd theta = vec({0.2, 0.2});
    const Eigen::MatrixXd K = oracle::gram(1.0, theta, 1e-6, X);
    const Eigen::MatrixXd L = Eigen::LLT<Eigen::MatrixXd>(K).matrixL();
    std::normal_distribution<double> n01;
    Eigen::VectorXd e(40);
    for (Eigen::Index i = 0; i < 40; ++i) e[i] = n01(rng);
    const Eigen::VectorXd y = L * e;

    FitConfig cfg;
    cfg.seed = 3;
    cfg.starts = 8;
    cfg.noise = NoiseMode::fixed;
    cfg.fixed_nugget = 1e-6;
    cfg.center = false;
    const GPModel m = fit_gp(X, y, cfg);
    for (int d = 0; d < 2; ++d) {
        CHECK(m.params().lengthscales[d] > 0.1);
        CHECK(m.params().lengthscales[d] < 0.4);
    }
    CHECK(m.fit_info().starts_run == 8);
    CHECK(m.fit_info().lml >= m.fit_info().initial_lml);
}

TEST_CASE("constant observations") {
    std::mt19937_64 rng(4);
    const Eigen::MatrixXd X = oracle::uniform_points(2, 10, rng);
    const Eigen::VectorXd y = Eigen::VectorXd::Constant(10, 3.5);
    FitConfig cfg;
    cfg.noise = NoiseMode::fixed;
    cfg.fixed_nugget = 1e-4;
    const GPModel m = fit_gp(X, y, cfg);
    const double nu = std::sqrt(1e-4);
    for (Eigen::Index i = 0; i < X.cols(); ++i) {
        CHECK(std::abs(m.predict(Eigen::VectorXd(X.col(i))).mean - 3.5) < nu);
    }
    CHECK(std::abs(m.predict(vec({0.5, 0.5})).mean - 3.5) < nu);
    CHECK(m.params().signal_variance() < 1.0);
}

TEST_CASE("fit input validation and fit reproducibility") {
    Eigen::MatrixXd X(1, 1);
    X << 0.5;
    CHECK_THROWS_AS(fit_gp(X, vec({1.0})), InvalidInput);
    Eigen::MatrixXd X2(1, 2);
    X2 << 0.1, 0.2;
    CHECK_THROWS_AS(fit_gp(X2, vec({1.0})), InvalidInput);
    CHECK_THROWS_AS(fit_gp(X2, vec({1.0, std::nan("")})), InvalidInput);

    std::mt19937_64 rng(8);
    const Eigen::MatrixXd X8 = oracle::uniform_points(2, 8, rng);
    Eigen::VectorXd y(8);
    for (Eigen::Index i = 0; i < 8; ++i) y[i] = std::cos(3 * X8(0, i)) + X8(1, i);
    FitConfig cfg;
    cfg.seed = 77;
    const GPModel a = fit_gp(X8, y, cfg);
    const GPModel b = fit_gp(X8, y, cfg);
    CHECK(a.params().lengthscales == b.params().lengthscales);
    CHECK(a.params().scale == b.params().scale);
    CHECK(a.params().nugget == b.params().nugget);
    CHECK(a.params().nugget >= cfg.nugget_floor);
}

TEST_CASE("cholesky append matches refactorization") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::MatrixXd X = oracle::uniform_points(2, 4, rng);
        const Eigen::VectorXd y = Eigen::VectorXd::Random(4);
        const KernelParams p = params(1.1, vec({0.3, 0.6}), 1e-3);
        const GPModel m = GPModel::condition(p, X, y);
        const Eigen::VectorXd x = oracle::uniform_points(2, 1, rng).col(0);
        const Eigen::MatrixXd L = chol_append(m, x);
        const Eigen::MatrixXd K = oracle::gram(1.1, p.lengthscales, 1e-3, oracle::with_column(X, x));
        const Eigen::MatrixXd ref = Eigen::LLT<Eigen::MatrixXd>(K).matrixL();
        CHECK((L - ref).norm() / ref.norm() < 1e-10);
    }
}

TEST_CASE("appending a duplicate input with a nugget") {
    Eigen::MatrixXd X(1, 2);
    X << 0.2, 0.7;
    const KernelParams p = params(1.0, vec({0.3}), 0.01);
    const GPModel m = GPModel::condition(p, X, vec({0.0, 1.0}));
    const Eigen::VectorXd dup = vec({0.2});
    AppendedRow row;
    CHECK_NOTHROW(row = append_row(m, dup));
    CHECK(row.pivot > 0.0);
    CHECK(row.jitter == 0.0);

    // Conditioned (noisy) variance at the appended site: nu^2 (2 s2 + nu^2) / (s2 + nu^2),
    // where s2 is the latent posterior variance before the append.
    const Eigen::VectorXd x = vec({0.45});
    const double s2 = m.predict(x).variance - p.nugget;
    const double expected = p.nugget * (2 * s2 + p.nugget) / (s2 + p.nugget);
    CHECK(std::abs(conditioned_variance(m, x, x) - expected) < 1e-8);
    CHECK(conditioned_variance(m, x, x) >= p.nugget);
    CHECK(conditioned_variance(m, x, x) <= 2 * p.nugget);
}

TEST_CASE("conditioned variance") {
    Eigen::MatrixXd X(2, 3);
    X << 0.1, 0.5, 0.8, 0.2, 0.9, 0.4;
    const Eigen::VectorXd y = vec({0.2, -0.1, 0.4});

    const GPModel noiseless = GPModel::condition(params(1.0, vec({0.3, 0.3}), 0.0), X, y);
    const Eigen::VectorXd xc = vec({0.35, 0.55});
    CHECK(std::abs(conditioned_variance(noiseless, xc, xc)) < 1e-8);

    const KernelParams p = params(1.3, vec({0.05, 0.05}), 0.002);
    const GPModel m = GPModel::condition(p, X, y);
    const Eigen::VectorXd s = vec({0.3, 0.3});
    const Eigen::VectorXd far = vec({0.95, 0.95});
    CHECK(std::abs(conditioned_variance(m, far, s) - m.predict(s).variance) < 1e-6);

    std::mt19937_64 rng(77);
    const KernelParams q = params(0.7, vec({0.4, 0.25}), 1e-3);
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::MatrixXd Xr = oracle::uniform_points(2, 6, rng);
        const GPModel mr = GPModel::condition(q, Xr, Eigen::VectorXd::Random(6));
        const Eigen::VectorXd cand = oracle::uniform_points(2, 1, rng).col(0);
        const Eigen::VectorXd site = oracle::uniform_points(2, 1, rng).col(0);
        const double want = oracle::conditioned_variance(0.7, q.lengthscales, 1e-3, Xr, cand, site);
        CHECK(std::abs(conditioned_variance(mr, cand, site) - want) < 1e-10);
        const Eigen::MatrixXd L = chol_append(mr, cand);
        CHECK(std::abs(conditioned_variance(mr, L, cand, site) - want) < 1e-10);
        CHECK(conditioned_variance(mr, cand, site) <= mr.predict(site).variance + 1e-12);
    }
}

TEST_CASE("with_observation equals conditioning on the extended data") {
    Eigen::MatrixXd X(1, 3);
    X << 0.1, 0.5, 0.9;
    const KernelParams p = params(1.0, vec({0.2}), 1e-3);
    const GPModel m = GPModel::condition(p, X, vec({0.1, 0.4, -0.3}), 0.05);
    const GPModel up = m.with_observation(vec({0.7}), 0.25);
    Eigen::MatrixXd X4(1, 4);
    X4 << 0.1, 0.5, 0.9, 0.7;
    const GPModel ref = GPModel::condition(p, X4, vec({0.1, 0.4, -0.3, 0.25}), 0.05);
    REQUIRE(up.size() == 4);
    for (double t : {0.0, 0.3, 0.65, 1.0}) {
        CHECK(std::abs(up.predict(vec({t})).mean - ref.predict(vec({t})).mean) < 1e-10);
        CHECK(std::abs(up.predict(vec({t})).variance - ref.predict(vec({t})).variance) < 1e-10);
    }
    CHECK(m.size() == 3);
}
