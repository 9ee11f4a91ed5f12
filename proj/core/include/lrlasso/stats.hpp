#pragma once

#include <span>

namespace lrlasso::stats {

double normal_cdf(double x);
double normal_upper_tail(double x);

// Mills ratio Q(x) / phi(x) for x >= 0, accurate far into the tail.
double mills_ratio(double x);

// Upper tail of the F(df1, df2) distribution.
double f_upper_tail(double f, double df1, double df2);

// One-sample Kolmogorov-Smirnov statistic against Unif(0, 1).
double ks_statistic_uniform(std::span<const double> sample);

// Asymptotic p-value of the KS statistic for sample size n (Stephens'
// small-sample correction applied to the Kolmogorov distribution).
double ks_pvalue(double statistic, std::size_t n);

double mean(std::span<const double> values);
double sample_sd(std::span<const double> values);
double median(std::span<const double> values);

}  // namespace lrlasso::stats
