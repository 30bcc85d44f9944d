#pragma once

namespace hilma {

// log(sqrt(2 pi)), the Gaussian normalizing constant.
inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;

// Standard normal CDF.
double norm_cdf(double x);

// log(norm_cdf(x)), stable far into the lower tail (asymptotic expansion
// below the erfc underflow threshold).
double log_norm_cdf(double x);

// Standard normal quantile (inverse CDF). Rational initial guess refined by
// one Halley step on the CDF; accurate to ~1e-15 on (0,1).
double norm_quantile(double p);

// Two-sided critical value for a central interval at the given level.
// The 95% value is pinned to 1.96 exactly (the reporting convention used
// throughout); other levels go through norm_quantile.
double interval_critical_value(double level);

// log standard-normal density
double log_norm_pdf(double x);

}  // namespace hilma
