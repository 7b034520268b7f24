#pragma once

#include <vector>

namespace dkreg::stats {

double mean(const std::vector<double>& x);
//! Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
double sd(const std::vector<double>& x);
double variance(const std::vector<double>& x);
//! Quantile with linear interpolation between order statistics (R type 7).
double quantile(std::vector<double> x, double p);
double median(const std::vector<double>& x);
double iqr(const std::vector<double>& x);
//! Kolmogorov-Smirnov distance between the empirical distribution of x and
//! the standard normal.
double ks_standard_normal(std::vector<double> x);
//! Least-squares slope of y on x (with intercept).
double ols_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace dkreg::stats
