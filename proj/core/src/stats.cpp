#include "condcop/stats.hpp"

#include "condcop/errors.hpp"
#include "condcop/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace condcop::stats {

namespace {

constexpr double nan = std::numeric_limits<double>::quiet_NaN();

void
require_nonempty(std::span<const double> x, const char* what)
{
  if (x.empty()) {
    throw DomainError(std::string(what) + " of an empty sample");
  }
}

void
require_paired(std::span<const double> x, std::span<const double> y)
{
  if (x.size() != y.size()) {
    throw DimensionMismatch("paired samples differ in length");
  }
  if (x.size() < 2) {
    throw DomainError("correlation needs at least two pairs");
  }
}

} // namespace

double
mean(std::span<const double> x)
{
  require_nonempty(x, "mean");
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double
sd(std::span<const double> x)
{
  if (x.size() < 2) {
    return nan;
  }
  // shifted by x[0] so that identical values give exactly zero
  const double shift = x[0];
  double sum = 0.0;
  for (double v : x) {
    sum += v - shift;
  }
  const double m = sum / static_cast<double>(x.size());
  double ss = 0.0;
  for (double v : x) {
    ss += (v - shift - m) * (v - shift - m);
  }
  return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

double
quantile(std::span<const double> x, double prob)
{
  require_nonempty(x, "quantile");
  if (!(prob >= 0.0 && prob <= 1.0)) {
    throw DomainError("quantile probability must lie in [0, 1]");
  }
  std::vector<double> sorted(x.begin(), x.end());
  std::sort(sorted.begin(), sorted.end());
  const double pos = prob * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double
median(std::span<const double> x)
{
  return quantile(x, 0.5);
}

double
min(std::span<const double> x)
{
  require_nonempty(x, "min");
  return *std::min_element(x.begin(), x.end());
}

double
max(std::span<const double> x)
{
  require_nonempty(x, "max");
  return *std::max_element(x.begin(), x.end());
}

double
kendall_tau(std::span<const double> x, std::span<const double> y)
{
  require_paired(x, y);
  const std::size_t n = x.size();
  long double concordant = 0;
  long double tied_x = 0;
  long double tied_y = 0;
  long double total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dx = x[i] - x[j];
      const double dy = y[i] - y[j];
      const double sx = (dx > 0) - (dx < 0);
      const double sy = (dy > 0) - (dy < 0);
      concordant += sx * sy;
      tied_x += sx == 0 ? 1 : 0;
      tied_y += sy == 0 ? 1 : 0;
      total += 1;
    }
  }
  const long double denom = std::sqrt((total - tied_x) * (total - tied_y));
  return denom > 0 ? static_cast<double>(concordant / denom) : nan;
}

std::vector<double>
ranks(std::span<const double> x)
{
  const std::size_t n = x.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{ 0 });
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> out(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && x[idx[j + 1]] == x[idx[i]]) {
      ++j;
    }
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) {
      out[idx[k]] = avg;
    }
    i = j + 1;
  }
  return out;
}

double
spearman(std::span<const double> x, std::span<const double> y)
{
  require_paired(x, y);
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  const double mx = mean(rx);
  const double my = mean(ry);
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return sxx > 0.0 && syy > 0.0 ? sxy / std::sqrt(sxx * syy) : nan;
}

double
anderson_darling_normal(std::span<const double> z)
{
  require_nonempty(z, "Anderson-Darling statistic");
  std::vector<double> sorted(z.begin(), z.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    // log Phi(z) and log(1 - Phi(z)) via erfc to keep the tails finite
    const double lower = std::log(normal_cdf(sorted[i]));
    const double upper = std::log(normal_cdf(-sorted[n - 1 - i]));
    s += static_cast<double>(2 * i + 1) * (lower + upper);
  }
  return -static_cast<double>(n) - s / static_cast<double>(n);
}

double
ks_uniform(std::span<const double> x)
{
  require_nonempty(x, "Kolmogorov-Smirnov statistic");
  std::vector<double> sorted(x.begin(), x.end());
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = std::clamp(sorted[i], 0.0, 1.0);
    d = std::max({ d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n });
  }
  return d;
}

} // namespace condcop::stats
