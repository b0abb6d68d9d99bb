#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace condcop {

double normal_pdf(double x);
double normal_cdf(double x);

//! Standard normal quantile. Acklam's rational approximation followed by one
//! Halley correction against erfc; accurate to well below 1e-9 on (0,1).
double normal_quantile(double p);

//! log(1 + exp(x)) without overflow.
double softplus(double x);

//! 1 / (1 + exp(-x)) without overflow.
double logistic(double x);

//! Gauss-Legendre rule on [-1, 1].
struct GaussLegendre
{
  std::vector<double> nodes;
  std::vector<double> weights;

  //! Nodes and weights for an n-point rule, computed by Newton iteration on
  //! the Legendre recurrence. Cached per n.
  static const GaussLegendre& get(std::size_t n);

  //! Integrates f over [a, b].
  double integrate(const std::function<double(double)>& f,
                   double a,
                   double b) const;
};

//! Composite rule on (0, 1): 16-point Gauss-Legendre on panels with edges at
//! 1e-8, 1e-6, 1e-4, 1e-3, 1e-2, 0.1 and 0.5 mirrored about 1/2. Suited to
//! copula integrands that are singular at the edges of the unit square.
//! Returned as a rule on (0, 1); weights sum to one.
const GaussLegendre& graded_unit_rule();

//! Adaptive Gauss-Kronrod quadrature of a smooth integrand over [a, b].
double integrate_adaptive(const std::function<double(double)>& f,
                          double a,
                          double b,
                          double tolerance = 1e-13);

//! Debye function of order one, (1/x) * int_0^x t / (e^t - 1) dt.
double debye1(double x);

} // namespace condcop
