#pragma once

namespace physcal {

// Standard normal density, distribution function and quantile.
double normal_pdf(double t);
double normal_cdf(double t);
double normal_quantile(double p);  // p in (0, 1)

// P(a <= Z <= b) for a standard normal Z, computed on the tail that keeps
// precision when both bounds sit deep in the same tail.
double normal_interval(double a, double b);

}  // namespace physcal
