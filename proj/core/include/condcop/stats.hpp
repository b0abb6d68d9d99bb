#pragma once

#include <span>
#include <vector>

namespace condcop::stats {

double
mean(std::span<const double> x);

//! Sample standard deviation (divisor n - 1); NaN when fewer than two values.
double
sd(std::span<const double> x);

double
median(std::span<const double> x);

//! Linear-interpolation quantile (Hyndman-Fan type 7).
double
quantile(std::span<const double> x, double prob);

double
min(std::span<const double> x);
double
max(std::span<const double> x);

//! Kendall's tau-b of the pairs (x_i, y_i).
double
kendall_tau(std::span<const double> x, std::span<const double> y);

//! Spearman rank correlation with average ranks for ties.
double
spearman(std::span<const double> x, std::span<const double> y);

//! Average ranks (1-based).
std::vector<double>
ranks(std::span<const double> x);

//! Anderson-Darling A^2 against the fully specified standard normal.
double
anderson_darling_normal(std::span<const double> z);

//! Upper 1% critical value of A^2 for a fully specified null.
inline constexpr double anderson_darling_critical_1pct = 3.857;

//! Kolmogorov-Smirnov D against Uniform(0,1).
double
ks_uniform(std::span<const double> x);

} // namespace condcop::stats
