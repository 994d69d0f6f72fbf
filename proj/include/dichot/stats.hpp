#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace dichot::stats {

/// Standard normal CDF.
double normal_cdf(double x);
/// Standard normal quantile.
double normal_quantile(double p);
/// Student t quantile with (possibly fractional) df; df = +inf gives the
/// normal quantile.
double student_t_quantile(double p, double df);
/// CDF of the standard t distribution with 3 degrees of freedom, closed form.
double t3_cdf(double x);

double mean(std::span<const double> xs);
/// Unbiased sample variance (n-1 denominator); requires at least 2 values.
double sample_variance(std::span<const double> xs);

/// Nearest-rank quantile: the ceil(q*n)-th order statistic of a sorted span.
double nearest_rank_quantile(std::span<const double> sorted, double q);

}  // namespace dichot::stats
