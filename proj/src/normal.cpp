#include "physcal/normal.hpp"

#include <cmath>

#include <boost/math/distributions/normal.hpp>

#include "physcal/error.hpp"

namespace physcal {

namespace {
constexpr double kInvSqrt2Pi = 0.39894228040143267793994605993438;
constexpr double kInvSqrt2 = 0.70710678118654752440084436210485;
}  // namespace

double normal_pdf(double t) { return kInvSqrt2Pi * std::exp(-0.5 * t * t); }

double normal_cdf(double t) { return 0.5 * std::erfc(-t * kInvSqrt2); }

double normal_quantile(double p) {
    require(p > 0.0 && p < 1.0, "normal_quantile: p must lie in (0, 1)");
    static const boost::math::normal_distribution<double> standard(0.0, 1.0);
    return boost::math::quantile(standard, p);
}

double normal_interval(double a, double b) {
    if (!(b > a)) return 0.0;
    if (a >= 0.0) {
        // both in the upper tail: Phi(-a) - Phi(-b)
        return 0.5 * (std::erfc(a * kInvSqrt2) - std::erfc(b * kInvSqrt2));
    }
    return normal_cdf(b) - normal_cdf(a);
}

}  // namespace physcal
