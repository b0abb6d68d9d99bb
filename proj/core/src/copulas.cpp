#include "condcop/copulas.hpp"

#include "condcop/errors.hpp"
#include "condcop/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace condcop {

std::string_view
to_string(FamilyId id)
{
  switch (id) {
    case FamilyId::Frank:
      return "frank";
    case FamilyId::Clayton:
      return "clayton";
    case FamilyId::Gaussian:
      return "gaussian";
  }
  return "unknown";
}

FamilyId
family_from_string(std::string_view name)
{
  if (name == "frank") {
    return FamilyId::Frank;
  }
  if (name == "clayton") {
    return FamilyId::Clayton;
  }
  if (name == "gaussian") {
    return FamilyId::Gaussian;
  }
  throw DomainError("unknown copula family '" + std::string(name) + "'");
}

FamilyPtr
make_family(FamilyId id)
{
  switch (id) {
    case FamilyId::Frank:
      return std::make_shared<FrankCopula>();
    case FamilyId::Clayton:
      return std::make_shared<ClaytonCopula>();
    case FamilyId::Gaussian:
      return std::make_shared<GaussianCopula>();
  }
  throw DomainError("unknown copula family");
}

// ---------------------------------------------------------------------------
// CopulaFamily

void
CopulaFamily::check_theta(double theta) const
{
  if (!theta_domain().contains(theta)) {
    std::ostringstream msg;
    msg << name() << ": theta = " << theta << " outside the admissible domain";
    throw DomainError(msg.str());
  }
}

void
CopulaFamily::check_unit(double u, const char* what)
{
  if (!(u > 0.0 && u < 1.0)) {
    std::ostringstream msg;
    msg << what << " = " << u << " must lie strictly inside (0,1)";
    throw DomainError(msg.str());
  }
}

double
CopulaFamily::log_density(double u, double v, double theta) const
{
  return log_density_derivatives(u, v, theta).value;
}

double
CopulaFamily::log_density_d1(double u, double v, double theta) const
{
  return log_density_derivatives(u, v, theta).d1;
}

double
CopulaFamily::log_density_d2(double u, double v, double theta) const
{
  return log_density_derivatives(u, v, theta).d2;
}

namespace {

// Conditional probabilities can round to 0 or 1 in the far tails.
double
open_unit(double p)
{
  return std::clamp(p, std::numeric_limits<double>::min(), std::nextafter(1.0, 0.0));
}

} // namespace

double
CopulaFamily::h_inverse(double p, double given, double theta) const
{
  check_unit(p, "p");
  check_unit(given, "conditioning value");
  check_theta(theta);
  double lo = 0.0;
  double hi = 1.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) {
      return mid;
    }
    if (h_function(mid, given, theta) < p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double u = 0.5 * (lo + hi);
  if (!(u > 0.0 && u < 1.0)) {
    throw ConvergenceError("h_inverse: bisection did not converge");
  }
  return u;
}

// ---------------------------------------------------------------------------
// Frank

namespace {

constexpr double frank_series_cutoff = 1e-3;

// 1 - exp(-x)
inline double
one_minus_exp_neg(double x)
{
  return -std::expm1(-x);
}

// Power series of log c(u, v | theta) around theta = 0, through theta^5.
LogDensityDerivatives
frank_series(double u, double v, double t)
{
  const double a = 2.0 * u - 1.0;
  const double b = 2.0 * v - 1.0;
  const double uu = u * (1.0 - u);
  const double vv = v * (1.0 - v);
  const double c1 = a * b / 2.0;
  const double c2 = uu * vv - 1.0 / 24.0;
  const double c3 = uu * vv * a * b / 6.0;
  const double c4 =
    1.0 / 2880.0 - (uu * uu * vv + uu * vv * vv) / 12.0 + uu * uu * vv * vv / 2.0;
  const double c5 = uu * vv * a * b * (36.0 * uu * vv - 3.0 * uu - 3.0 * vv - 1.0) /
                    360.0;
  LogDensityDerivatives out;
  out.value = t * (c1 + t * (c2 + t * (c3 + t * (c4 + t * c5))));
  out.d1 = c1 + t * (2.0 * c2 + t * (3.0 * c3 + t * (4.0 * c4 + t * 5.0 * c5)));
  out.d2 = 2.0 * c2 + t * (6.0 * c3 + t * (12.0 * c4 + t * 20.0 * c5));
  return out;
}

// Frank log density for theta > 0 written so that no term cancels:
// D = e^{-tu}(1 - e^{-t(1-u)}) + e^{-tv}(1 - e^{-tu}) is a sum of positives.
LogDensityDerivatives
frank_positive(double u, double v, double t, bool with_derivatives)
{
  const double eu = std::exp(-t * u);
  const double ev = std::exp(-t * v);
  const double eu_c = one_minus_exp_neg(t * u);
  const double ev_c = one_minus_exp_neg(t * v);
  const double denom = eu * one_minus_exp_neg(t * (1.0 - u)) + ev * eu_c;
  const double one_minus_et = one_minus_exp_neg(t);

  LogDensityDerivatives out;
  out.value = std::log(t * one_minus_et / (denom * denom)) - t * (u + v);
  if (!with_derivatives) {
    return out;
  }
  const double et = std::exp(-t);
  const double expm1_t = one_minus_et / et;
  const double d1 = et - u * eu * ev_c - v * ev * eu_c;
  const double d2 = u * u * eu * ev_c + v * v * ev * eu_c - 2.0 * u * v * eu * ev - et;
  const double r1 = d1 / denom;
  const double r2 = d2 / denom;
  out.d1 = 1.0 / t + 1.0 / expm1_t - (u + v) - 2.0 * r1;
  out.d2 = -1.0 / (t * t) - 1.0 / (expm1_t * one_minus_et) - 2.0 * (r2 - r1 * r1);
  return out;
}

LogDensityDerivatives
frank_eval(double u, double v, double theta, bool with_derivatives)
{
  if (std::abs(theta) < frank_series_cutoff) {
    return frank_series(u, v, theta);
  }
  if (theta > 0.0) {
    return frank_positive(u, v, theta, with_derivatives);
  }
  // c(u, v | -t) = c(u, 1 - v | t)
  auto out = frank_positive(u, 1.0 - v, -theta, with_derivatives);
  out.d1 = -out.d1;
  return out;
}

// h(u | v) for theta > 0.
double
frank_h_positive(double u, double v, double t)
{
  const double eu = std::exp(-t * u);
  const double ev = std::exp(-t * v);
  const double eu_c = one_minus_exp_neg(t * u);
  const double denom = eu * one_minus_exp_neg(t * (1.0 - u)) + ev * eu_c;
  return ev * eu_c / denom;
}

double
frank_h_inverse_positive(double p, double v, double t)
{
  const double ev = std::exp(-t * v);
  const double frac = p * one_minus_exp_neg(t) / (p + (1.0 - p) * ev);
  if (frac <= 0.5) {
    return -std::log1p(-frac) / t;
  }
  // 1 - frac = ((1-p) e^{-tv} + p e^{-t}) / (p + (1-p) e^{-tv}), in logs.
  const auto log_add = [](double a, double b) {
    const double m = std::max(a, b);
    return m + std::log1p(std::exp(std::min(a, b) - m));
  };
  const double lq = std::log1p(-p) - t * v;
  const double lp = std::log(p);
  return (log_add(lp, lq) - log_add(lq, lp - t)) / t;
}

template<class Value>
Value
checked(Value x, const char* what)
{
  if (!std::isfinite(x)) {
    throw OverflowGuard(std::string(what) + ": non-finite result");
  }
  return x;
}

} // namespace

LogDensityDerivatives
FrankCopula::log_density_derivatives(double u, double v, double theta) const
{
  check_unit(u, "u");
  check_unit(v, "v");
  check_theta(theta);
  auto out = frank_eval(u, v, theta, true);
  checked(out.value + out.d1 + out.d2, "frank log density");
  return out;
}

double
FrankCopula::log_density(double u, double v, double theta) const
{
  check_unit(u, "u");
  check_unit(v, "v");
  check_theta(theta);
  return checked(frank_eval(u, v, theta, false).value, "frank log density");
}

double
FrankCopula::h_function(double u, double given, double theta) const
{
  check_unit(u, "u");
  check_unit(given, "conditioning value");
  check_theta(theta);
  if (theta == 0.0) {
    return u;
  }
  if (theta > 0.0) {
    return open_unit(frank_h_positive(u, given, theta));
  }
  return open_unit(frank_h_positive(u, 1.0 - given, -theta));
}

double
FrankCopula::h_inverse(double p, double given, double theta) const
{
  check_unit(p, "p");
  check_unit(given, "conditioning value");
  check_theta(theta);
  if (theta == 0.0) {
    return p;
  }
  const double u = theta > 0.0 ? frank_h_inverse_positive(p, given, theta)
                               : frank_h_inverse_positive(p, 1.0 - given, -theta);
  if (u > 0.0 && u < 1.0) {
    return u;
  }
  return CopulaFamily::h_inverse(p, given, theta);
}

double
FrankCopula::kendall_tau(double theta) const
{
  check_theta(theta);
  const double t = std::abs(theta);
  double tau;
  if (t < 1e-4) {
    tau = t / 9.0 - t * t * t / 900.0;
  } else {
    tau = 1.0 - 4.0 / t * (1.0 - debye1(t));
  }
  return theta < 0.0 ? -tau : tau;
}

// ---------------------------------------------------------------------------
// Clayton

namespace {

// L(t) = log(e^{ta} + e^{tb} - 1) with its weights w_a = e^{ta - L},
// w_b = e^{tb - L}, for a, b > 0.
struct ClaytonLog
{
  double log_a;
  double w_a;
  double w_b;
};

ClaytonLog
clayton_log(double a, double b, double t)
{
  const double m = std::max(t * a, t * b);
  double l;
  if (m < 1.0) {
    l = std::log1p(std::expm1(t * a) + std::expm1(t * b));
  } else {
    l = m + std::log(std::exp(t * a - m) + std::exp(t * b - m) - std::exp(-m));
  }
  return { l, std::exp(t * a - l), std::exp(t * b - l) };
}

// Central moments of L: returns L', L'', L'''.
std::array<double, 3>
clayton_log_derivatives(double a, double b, const ClaytonLog& cl)
{
  const double m1 = a * cl.w_a + b * cl.w_b;
  const double m2 = a * a * cl.w_a + b * b * cl.w_b;
  const double m3 = a * a * a * cl.w_a + b * b * b * cl.w_b;
  return { m1, m2 - m1 * m1, m3 - 3.0 * m2 * m1 + 2.0 * m1 * m1 * m1 };
}

} // namespace

LogDensityDerivatives
ClaytonCopula::log_density_derivatives(double u, double v, double theta) const
{
  check_unit(u, "u");
  check_unit(v, "v");
  check_theta(theta);
  const double a = -std::log(u);
  const double b = -std::log(v);
  const double t = theta;

  const ClaytonLog cl = clayton_log(a, b, t);
  const auto dl = clayton_log_derivatives(a, b, cl);

  // g(t) = L(t) / t and its derivatives. Near t = 0 the direct quotients
  // cancel badly, so use g(t) = int_0^1 L'(t s) ds instead.
  double g;
  double g1;
  double g2;
  if (t * std::max({ a, b, 1.0 }) < 1.0) {
    const auto& rule = GaussLegendre::get(20);
    g = g1 = g2 = 0.0;
    for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
      const double s = 0.5 * (rule.nodes[k] + 1.0);
      const double w = 0.5 * rule.weights[k];
      const auto inner = clayton_log_derivatives(a, b, clayton_log(a, b, t * s));
      g += w * inner[0];
      g1 += w * s * inner[1];
      g2 += w * s * s * inner[2];
    }
  } else {
    g = cl.log_a / t;
    g1 = (t * dl[0] - cl.log_a) / (t * t);
    g2 = (t * t * dl[1] - 2.0 * t * dl[0] + 2.0 * cl.log_a) / (t * t * t);
  }

  LogDensityDerivatives out;
  out.value = std::log1p(t) + (t + 1.0) * (a + b) - 2.0 * cl.log_a - g;
  out.d1 = 1.0 / (1.0 + t) + (a + b) - 2.0 * dl[0] - g1;
  out.d2 = -1.0 / ((1.0 + t) * (1.0 + t)) - 2.0 * dl[1] - g2;
  checked(out.value + out.d1 + out.d2, "clayton log density");
  return out;
}

double
ClaytonCopula::h_function(double u, double given, double theta) const
{
  check_unit(u, "u");
  check_unit(given, "conditioning value");
  check_theta(theta);
  const double a = -std::log(u);
  const double b = -std::log(given);
  const ClaytonLog cl = clayton_log(a, b, theta);
  // log h = (t + 1) b - (1 + 1/t) L
  const double log_h = (theta + 1.0) * b - (1.0 + 1.0 / theta) * cl.log_a;
  return open_unit(std::exp(log_h));
}

double
ClaytonCopula::h_inverse(double p, double given, double theta) const
{
  check_unit(p, "p");
  check_unit(given, "conditioning value");
  check_theta(theta);
  const double t = theta;
  const double b = -std::log(given);
  // u^{-t} = 1 + v^{-t} (p^{-t/(t+1)} - 1)
  const double k = -t / (t + 1.0) * std::log(p);
  const double w = t * b + std::log(std::expm1(k));
  const double u = std::exp(-softplus(w) / t);
  if (u > 0.0 && u < 1.0) {
    return u;
  }
  return CopulaFamily::h_inverse(p, given, theta);
}

double
ClaytonCopula::kendall_tau(double theta) const
{
  check_theta(theta);
  return theta / (theta + 2.0);
}

// ---------------------------------------------------------------------------
// Gaussian

LogDensityDerivatives
GaussianCopula::log_density_derivatives(double u, double v, double theta) const
{
  check_unit(u, "u");
  check_unit(v, "v");
  check_theta(theta);
  const double x = normal_quantile(u);
  const double y = normal_quantile(v);
  const double r = theta;
  const double q = (1.0 - r) * (1.0 + r);
  const double ss = x * x + y * y;
  const double xy = x * y;

  LogDensityDerivatives out;
  out.value = -0.5 * std::log(q) - (r * r * ss - 2.0 * r * xy) / (2.0 * q);
  out.d1 = (r * q + (1.0 + r * r) * xy - r * ss) / (q * q);
  const double r2 = r * r;
  out.d2 = -(r2 * r2 - 2.0 * r2 * r * xy + 3.0 * r2 * ss - 6.0 * r * xy + ss - 1.0) /
           (q * q * q);
  checked(out.value + out.d1 + out.d2, "gaussian log density");
  return out;
}

double
GaussianCopula::h_function(double u, double given, double theta) const
{
  check_unit(u, "u");
  check_unit(given, "conditioning value");
  check_theta(theta);
  const double x = normal_quantile(u);
  const double y = normal_quantile(given);
  const double q = (1.0 - theta) * (1.0 + theta);
  return open_unit(normal_cdf((x - theta * y) / std::sqrt(q)));
}

double
GaussianCopula::h_inverse(double p, double given, double theta) const
{
  check_unit(p, "p");
  check_unit(given, "conditioning value");
  check_theta(theta);
  const double q = (1.0 - theta) * (1.0 + theta);
  const double u =
    normal_cdf(normal_quantile(p) * std::sqrt(q) + theta * normal_quantile(given));
  if (u > 0.0 && u < 1.0) {
    return u;
  }
  return CopulaFamily::h_inverse(p, given, theta);
}

double
GaussianCopula::kendall_tau(double theta) const
{
  check_theta(theta);
  return 2.0 / std::numbers::pi * std::asin(theta);
}

// ---------------------------------------------------------------------------
// Sampling

CopulaPoint
draw(const CopulaFamily& family, double theta, Rng& rng)
{
  const double p = uniform_open(rng);
  const double u2 = uniform_open(rng);
  return { family.h_inverse(p, u2, theta), u2 };
}

std::vector<CopulaPoint>
sample(const CopulaFamily& family, double theta, std::size_t count, Rng& rng)
{
  family.check_theta(theta);
  std::vector<CopulaPoint> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(draw(family, theta, rng));
  }
  return out;
}

std::vector<CopulaPoint>
sample(const CopulaFamily& family,
       double theta,
       std::size_t count,
       std::uint64_t seed)
{
  Rng rng(seed);
  return sample(family, theta, count, rng);
}

} // namespace condcop
