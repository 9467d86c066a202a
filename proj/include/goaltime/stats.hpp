#pragma once

namespace goaltime {

/// Standard normal CDF.
double normal_cdf(double x);

/// Two-sided normal p-value for a Wald statistic z.
double normal_two_sided_p(double z);

/// Regularized upper incomplete gamma Q(a, x) = Gamma(a,x) / Gamma(a), a > 0, x >= 0.
double gamma_q(double a, double x);

/// Upper tail of the chi-square distribution with df degrees of freedom.
double chisq_upper_tail(double x, int df);

}  // namespace goaltime
