#include "condcop/numerics.hpp"

#include "condcop/errors.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>

namespace condcop {

double
normal_pdf(double x)
{
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

double
normal_cdf(double x)
{
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

double
normal_quantile(double p)
{
  if (!(p > 0.0 && p < 1.0)) {
    throw DomainError("normal_quantile: probability must lie in (0,1)");
  }
  static constexpr double a[] = { -3.969683028665376e+01, 2.209460984245205e+02,
                                  -2.759285104469687e+02, 1.383577518672690e+02,
                                  -3.066479806614716e+01, 2.506628277459239e+00 };
  static constexpr double b[] = { -5.447609879822406e+01, 1.615858368580409e+02,
                                  -1.556989798598866e+02, 6.680131188771972e+01,
                                  -1.328068155288572e+01 };
  static constexpr double c[] = { -7.784894002430293e-03, -3.223964580411365e-01,
                                  -2.400758277161838e+00, -2.549732539343734e+00,
                                  4.374664141464968e+00,  2.938163982698783e+00 };
  static constexpr double d[] = { 7.784695709041462e-03, 3.224671290700398e-01,
                                  2.445134137142996e+00, 3.754408661907416e+00 };
  constexpr double p_low = 0.02425;

  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) *
        q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }

  // Halley step; the residual is taken on whichever tail keeps precision.
  const double e = (x < 0.0) ? normal_cdf(x) - p : (1.0 - p) - normal_cdf(-x);
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  x = x - u / (1.0 + 0.5 * x * u);
  return x;
}

double
softplus(double x)
{
  if (x > 0.0) {
    return x + std::log1p(std::exp(-x));
  }
  return std::log1p(std::exp(x));
}

double
logistic(double x)
{
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

namespace {

GaussLegendre
build_rule(std::size_t n)
{
  GaussLegendre rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const std::size_t half = (n + 1) / 2;
  for (std::size_t i = 0; i < half; ++i) {
    double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) /
                        (static_cast<double>(n) + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0;
      double p1 = x;
      for (std::size_t k = 2; k <= n; ++k) {
        const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      if (n == 1) {
        p1 = x;
        p0 = 1.0;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) {
        break;
      }
    }
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  return rule;
}

} // namespace

const GaussLegendre&
GaussLegendre::get(std::size_t n)
{
  static std::mutex mutex;
  static std::map<std::size_t, GaussLegendre> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(n);
  if (it == cache.end()) {
    it = cache.emplace(n, build_rule(n)).first;
  }
  return it->second;
}

const GaussLegendre&
graded_unit_rule()
{
  static const GaussLegendre rule = [] {
    static constexpr double edges[] = { 0.0, 1e-8, 1e-6, 1e-4, 1e-3, 1e-2, 0.1, 0.5 };
    const GaussLegendre& base = GaussLegendre::get(16);
    GaussLegendre out;
    const auto add = [&](double a, double b) {
      for (std::size_t i = 0; i < base.nodes.size(); ++i) {
        out.nodes.push_back(0.5 * (a + b) + 0.5 * (b - a) * base.nodes[i]);
        out.weights.push_back(0.5 * (b - a) * base.weights[i]);
      }
    };
    for (std::size_t k = 0; k + 1 < std::size(edges); ++k) {
      add(edges[k], edges[k + 1]);
      add(1.0 - edges[k + 1], 1.0 - edges[k]);
    }
    return out;
  }();
  return rule;
}

double
GaussLegendre::integrate(const std::function<double(double)>& f,
                         double a,
                         double b) const
{
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double sum = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    sum += weights[i] * f(mid + half * nodes[i]);
  }
  return half * sum;
}

double
integrate_adaptive(const std::function<double(double)>& f,
                   double a,
                   double b,
                   double tolerance)
{
  return boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
    f, a, b, 20, tolerance);
}

double
debye1(double x)
{
  if (x == 0.0) {
    return 1.0;
  }
  if (std::abs(x) < 1e-4) {
    // 1 - x/4 + x^2/36 - x^4/3600
    const double x2 = x * x;
    return 1.0 - x / 4.0 + x2 / 36.0 - x2 * x2 / 3600.0;
  }
  auto integrand = [](double t) {
    if (t == 0.0) {
      return 1.0;
    }
    return t / std::expm1(t);
  };
  return integrate_adaptive(integrand, 0.0, x) / x;
}

} // namespace condcop
