#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "physcal/acquisition.hpp"
#include "physcal/gp.hpp"

using namespace physcal;

// Randomized invariants over many small instances.

TEST_CASE("conditioning never increases variance") {
    std::mt19937_64 rng(1234);
    std::uniform_real_distribution<double> u(0.05, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        const int D = 1 + trial % 3;
        const int n = 2 + trial % 7;
        const Eigen::MatrixXd X = oracle::uniform_points(D, n, rng);
        KernelParams p;
        p.scale = u(rng) * 2.0;
        p.lengthscales = Eigen::VectorXd::NullaryExpr(D, [&] { return u(rng); });
        p.nugget = 1e-6 + 0.01 * u(rng);
        const GPModel m = GPModel::condition(p, X, Eigen::VectorXd::Random(n));
        const Eigen::VectorXd x = oracle::uniform_points(D, 1, rng).col(0);
        const Eigen::VectorXd s = oracle::uniform_points(D, 1, rng).col(0);
        const double before = m.predict(s).variance;
        const double after = conditioned_variance(m, x, s);
        CHECK(after <= before + 1e-12);
        CHECK(after >= 0.0);
        CHECK(before <= p.prior_variance());
    }
}

TEST_CASE("boundary score stays within [0, eta^2]") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> mean(-3.0, 3.0), sd(1e-6, 2.0), alpha(0.1, 4.0);
    for (int trial = 0; trial < 2000; ++trial) {
        const double s = sd(rng), a = alpha(rng);
        const double v = j_h(mean(rng), s, a, 0.7);
        CHECK(v >= 0.0);
        CHECK(v <= a * a * s * s);
    }
}

TEST_CASE("normalized scores stay in [0, 1]") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> raw(1 + trial % 20);
        for (double& v : raw) v = u(rng);
        for (double v : normalize_grid(raw).values) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
    }
}
