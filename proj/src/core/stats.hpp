#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace synteval {

/// Standard normal CDF.
double normal_cdf(double x);

/// Standard normal density.
double normal_pdf(double x);

/// Standard normal quantile, accurate to ~1e-15 over (0, 1).
double normal_quantile(double p);

/// Bivariate standard normal CDF P(X <= h, Y <= k) with correlation rho.
/// Infinite bounds are handled. Accuracy ~1e-12.
double bivariate_normal_cdf(double h, double k, double rho);

inline double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double logit(double p);

/// Type-7 (linear interpolation between order statistics) quantile of an
/// unsorted sample. q in [0, 1].
double quantile_type7(std::span<const double> values, double q);

/// Same, for values already sorted ascending.
double quantile_type7_sorted(std::span<const double> sorted, double q);

double mean(std::span<const double> v);
/// Unbiased (n-1) sample variance; 0 for n < 2.
double sample_variance(std::span<const double> v);
double sample_sd(std::span<const double> v);

/// Pearson correlation; returns 0 when either side is constant.
double pearson(std::span<const double> x, std::span<const double> y);

/// Two-sample Kolmogorov-Smirnov distance sup|F_a - F_b|.
double ks_statistic(std::vector<double> a, std::vector<double> b);

/// Asymptotic two-sample KS p-value.
double ks_pvalue(double d, std::size_t n_a, std::size_t n_b);

}  // namespace synteval
