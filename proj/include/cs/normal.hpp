#pragma once

// Scalar Gaussian helpers shared by the constraint emitters, the risk
// reallocation loop and the Monte Carlo validators.

namespace cs {

// Standard normal cumulative distribution function.
double norm_cdf(double x);

// Standard normal quantile (inverse CDF), accurate to ~1e-15 relative over
// the full open interval. Throws std::domain_error for p <= 0 or p >= 1.
double norm_quantile(double p);

// Standard normal density.
double norm_pdf(double x);

// Mass a centered circular Gaussian places on the disk of radius
// a*sigma: 1 - exp(-a^2/2).
double disk_probability(double a);

}  // namespace cs
